use thiserror::Error;

use super::{Bounds, Objective, ProblemError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationCounter {
    pub used: usize,
    pub budget: usize,
}

impl EvaluationCounter {
    pub fn remaining(&self) -> usize {
        self.budget - self.used
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// 1-based evaluation number.
    pub index: usize,
    pub raw: f64,
    pub best_so_far: f64,
}

/// Per-evaluation log of raw fitness and running minimum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrajectory {
    pub instance_id: String,
    evals: Vec<Evaluation>,
}

impl RunTrajectory {
    pub fn new(instance_id: impl Into<String>) -> Self {
        Self { instance_id: instance_id.into(), evals: Vec::new() }
    }

    /// Builds a trajectory from raw fitness values, computing the running minimum.
    pub fn from_raw(instance_id: impl Into<String>, raw: impl IntoIterator<Item = f64>) -> Self {
        let mut t = Self::new(instance_id);
        for v in raw {
            t.record(v);
        }
        t
    }

    /// Rebuilds a trajectory from stored rows; indices must increase and best-so-far must
    /// not increase.
    pub fn from_evaluations(instance_id: impl Into<String>, evals: Vec<Evaluation>) -> Result<Self, String> {
        for w in evals.windows(2) {
            if w[1].index <= w[0].index {
                return Err(format!("evaluation indices not increasing at {}", w[1].index));
            }
            if w[1].best_so_far > w[0].best_so_far {
                return Err(format!("best-so-far increases at evaluation {}", w[1].index));
            }
        }
        Ok(Self { instance_id: instance_id.into(), evals })
    }

    pub fn record(&mut self, raw: f64) -> Evaluation {
        let best_so_far = match self.evals.last() {
            Some(prev) if !(raw < prev.best_so_far) => prev.best_so_far,
            _ => raw,
        };
        let e = Evaluation { index: self.evals.len() + 1, raw, best_so_far };
        self.evals.push(e);
        e
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evals
    }

    pub fn len(&self) -> usize {
        self.evals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evals.is_empty()
    }

    pub fn best(&self) -> Option<f64> {
        self.evals.last().map(|e| e.best_so_far)
    }

    pub fn best_so_far(&self) -> impl Iterator<Item = f64> + '_ {
        self.evals.iter().map(|e| e.best_so_far)
    }
}

/// Budget-enforcing wrapper around an objective. Records every call and the best point.
///
/// One optimizer run owns one wrapper.
pub struct Budgeted<'a> {
    objective: &'a dyn Objective,
    counter: EvaluationCounter,
    trajectory: RunTrajectory,
    best_x: Option<Vec<f64>>,
}

impl<'a> Budgeted<'a> {
    pub fn new(objective: &'a dyn Objective, budget: usize, instance_id: impl Into<String>) -> Self {
        Self {
            objective,
            counter: EvaluationCounter { used: 0, budget },
            trajectory: RunTrajectory::new(instance_id),
            best_x: None,
        }
    }

    pub fn bounds(&self) -> &Bounds {
        self.objective.bounds()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn budget(&self) -> usize {
        self.counter.budget
    }

    pub fn used(&self) -> usize {
        self.counter.used
    }

    pub fn remaining(&self) -> usize {
        self.counter.remaining()
    }

    pub fn counter(&self) -> EvaluationCounter {
        self.counter
    }

    /// Evaluates `x`, consuming one unit of budget. Rejected calls (budget, dimension or
    /// bounds) leave the counter and trajectory untouched.
    pub fn call(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        if self.counter.used >= self.counter.budget {
            return Err(EvalError::BudgetExhausted { budget: self.counter.budget });
        }
        let value = self.objective.evaluate(x)?;
        self.counter.used += 1;
        let improved = self.trajectory.best().is_none_or(|b| value < b);
        self.trajectory.record(value);
        if improved {
            self.best_x = Some(x.to_vec());
        }
        Ok(value)
    }

    pub fn trajectory(&self) -> &RunTrajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> RunTrajectory {
        self.trajectory
    }

    /// Best point evaluated so far and its fitness.
    pub fn best(&self) -> Option<(&[f64], f64)> {
        Some((self.best_x.as_deref()?, self.trajectory.best()?))
    }
}
