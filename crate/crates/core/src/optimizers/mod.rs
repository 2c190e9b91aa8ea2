//! Baseline black-box optimizers.
//!
//! All optimizers search the unit cube and map points affinely onto the objective box, so
//! step sizes and tolerances are relative to the box width. Every run draws from a
//! `ChaCha8Rng` seeded with `OptimizerConfig::seed` and is reproducible bit for bit.

mod bfgs;
mod cmaes;
mod de;

pub use bfgs::{finite_difference_gradient, run_bfgs_restart, BfgsStats, FD_STEP};
pub use cmaes::{run_cmaes, CmaEs, CmaStats};
pub use de::{quasi_opposite, run_de, run_qnde, run_qode, QndeStats, QodeStats};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::{Budgeted, EvalError, Objective, ProblemError, RunTrajectory};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("budget {budget} is below the {required} evaluations this optimizer needs")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("unknown optimizer `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    De,
    Qode,
    Qnde,
    BfgsRestart,
    CmaEs,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] =
        [OptimizerKind::De, OptimizerKind::Qode, OptimizerKind::Qnde, OptimizerKind::BfgsRestart, OptimizerKind::CmaEs];

    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::De => "de",
            OptimizerKind::Qode => "qode",
            OptimizerKind::Qnde => "qnde",
            OptimizerKind::BfgsRestart => "bfgs-restart",
            OptimizerKind::CmaEs => "cma-es",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "de" => Ok(OptimizerKind::De),
            "qode" => Ok(OptimizerKind::Qode),
            "qnde" => Ok(OptimizerKind::Qnde),
            "bfgs" | "bfgs-restart" => Ok(OptimizerKind::BfgsRestart),
            "cma-es" | "cmaes" => Ok(OptimizerKind::CmaEs),
            _ => Err(OptimizerError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// DE population or CMA-ES lambda. `None` picks the per-family default.
    pub population_size: Option<usize>,
    pub de_f: f64,
    pub de_cr: f64,
    pub jumping_rate: f64,
    /// Fraction of the budget QNDE spends in its DE phase.
    pub hybrid_split: f64,
    /// Initial CMA-ES step size as a fraction of the box width.
    pub sigma0: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::De,
            population_size: None,
            de_f: 0.5,
            de_cr: 0.9,
            jumping_rate: 0.3,
            hybrid_split: 0.75,
            sigma0: 0.3,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, seed: u64) -> Self {
        Self { kind, seed, ..Self::default() }
    }

    pub fn with_population(mut self, size: usize) -> Self {
        self.population_size = Some(size);
        self
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidConfig(m));
        if let Some(p) = self.population_size {
            let min = if self.kind == OptimizerKind::CmaEs { 2 } else { 4 };
            if p < min {
                return bad(format!("population_size {p} below {min}"));
            }
        }
        if !(self.de_f >= 0.0 && self.de_f <= 2.0) {
            return bad(format!("de_f {} outside [0, 2]", self.de_f));
        }
        if !(0.0..=1.0).contains(&self.de_cr) {
            return bad(format!("de_cr {} outside [0, 1]", self.de_cr));
        }
        if !(0.0..=1.0).contains(&self.jumping_rate) {
            return bad(format!("jumping_rate {} outside [0, 1]", self.jumping_rate));
        }
        if !(self.hybrid_split > 0.0 && self.hybrid_split < 1.0) {
            return bad(format!("hybrid_split {} outside (0, 1)", self.hybrid_split));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad(format!("sigma0 {} must be positive", self.sigma0));
        }
        Ok(())
    }

    /// DE population: `10 * dim` clamped to `[4, 50]` unless overridden.
    pub fn de_population(&self, dim: usize) -> usize {
        self.population_size.unwrap_or((10 * dim).clamp(4, 50))
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Result of a complete optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trajectory: RunTrajectory,
    pub best_x: Vec<f64>,
    pub best_fitness: f64,
}

/// Runs the configured optimizer on `objective` for exactly `budget` evaluations.
pub fn optimize(
    objective: &dyn Objective,
    budget: usize,
    cfg: &OptimizerConfig,
    instance_id: &str,
) -> Result<RunOutcome, OptimizerError> {
    let mut f = Budgeted::new(objective, budget, instance_id);
    match cfg.kind {
        OptimizerKind::De => run_de(&mut f, cfg)?,
        OptimizerKind::Qode => {
            run_qode(&mut f, cfg)?;
        }
        OptimizerKind::Qnde => {
            run_qnde(&mut f, cfg)?;
        }
        OptimizerKind::BfgsRestart => {
            run_bfgs_restart(&mut f, cfg)?;
        }
        OptimizerKind::CmaEs => {
            run_cmaes(&mut f, cfg)?;
        }
    }
    let (best_x, best_fitness) = f.best().map(|(x, y)| (x.to_vec(), y)).ok_or(OptimizerError::BudgetTooSmall { budget, required: 1 })?;
    Ok(RunOutcome { trajectory: f.into_trajectory(), best_x, best_fitness })
}

/// Why an inner optimizer loop stopped early.
pub(crate) enum Stop {
    Exhausted,
    Failed(ProblemError),
}

pub(crate) fn finish(r: Result<(), Stop>) -> Result<(), OptimizerError> {
    match r {
        Ok(()) | Err(Stop::Exhausted) => Ok(()),
        Err(Stop::Failed(e)) => Err(e.into()),
    }
}

/// Unit-cube view of a budgeted objective with an optional evaluation cap.
pub(crate) struct UnitSpace<'f, 'o> {
    f: &'f mut Budgeted<'o>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    limit: usize,
    buf: Vec<f64>,
}

impl<'f, 'o> UnitSpace<'f, 'o> {
    pub fn new(f: &'f mut Budgeted<'o>) -> Self {
        let lower = f.bounds().lower().to_vec();
        let upper = f.bounds().upper().to_vec();
        let limit = f.budget();
        let buf = vec![0.0; lower.len()];
        Self { f, lower, upper, limit, buf }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Caps the total evaluation count (including earlier calls) at `limit`.
    pub fn set_limit(&mut self, limit: usize) {
        self.limit = limit.min(self.f.budget());
    }

    pub fn remaining(&self) -> usize {
        self.limit.saturating_sub(self.f.used())
    }

    pub fn to_real(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; u.len()];
        self.map_into(u, &mut x);
        x
    }

    fn map_into(&self, u: &[f64], x: &mut [f64]) {
        for (i, (&ui, xi)) in u.iter().zip(x.iter_mut()).enumerate() {
            let (l, h) = (self.lower[i], self.upper[i]);
            *xi = (l + ui.clamp(0.0, 1.0) * (h - l)).clamp(l, h);
        }
    }

    pub fn eval(&mut self, u: &[f64]) -> Result<f64, Stop> {
        if self.remaining() == 0 {
            return Err(Stop::Exhausted);
        }
        let mut buf = std::mem::take(&mut self.buf);
        self.map_into(u, &mut buf);
        let r = self.f.call(&buf);
        self.buf = buf;
        match r {
            Ok(v) => Ok(v),
            Err(EvalError::BudgetExhausted { .. }) => Err(Stop::Exhausted),
            Err(EvalError::Problem(e)) => Err(Stop::Failed(e)),
        }
    }
}

pub(crate) fn uniform_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::problems::{Bounds, FnObjective};
    use std::sync::Mutex;

    #[test]
    fn kinds_parse() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.as_str().parse::<OptimizerKind>().unwrap(), k);
        }
        assert_eq!("cmaes".parse::<OptimizerKind>().unwrap(), OptimizerKind::CmaEs);
        assert!("pso".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(OptimizerConfig::default().with_population(3).validate().is_err());
        assert!(OptimizerConfig { de_cr: 1.5, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { hybrid_split: 1.0, ..Default::default() }.validate().is_err());
        assert_eq!(OptimizerConfig::default().de_population(2), 20);
        assert_eq!(OptimizerConfig::default().de_population(10), 50);
        assert_eq!(OptimizerConfig::default().de_population(0), 4);
        let parsed: OptimizerConfig = toml::from_str("kind = \"cma-es\"\nsigma0 = 0.2\n").unwrap();
        assert_eq!(parsed.kind, OptimizerKind::CmaEs);
        assert_eq!(parsed.de_f, 0.5);
    }

    #[test]
    fn every_optimizer_uses_exact_budget_and_stays_in_bounds() {
        let seen = Mutex::new(Vec::new());
        let bounds = Bounds::new(vec![-1.0, 2.0, 0.0], vec![1.0, 7.0, 0.001]).unwrap();
        let obj = FnObjective::new(bounds.clone(), |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            (x[0] - 0.3).powi(2) + (x[1] - 6.9).abs() + x[2]
        });
        for kind in OptimizerKind::ALL {
            for budget in [70, 137, 400] {
                seen.lock().unwrap().clear();
                let out = optimize(&obj, budget, &OptimizerConfig::new(kind, 3), "t").unwrap();
                assert_eq!(out.trajectory.len(), budget, "{kind}");
                let pts = seen.lock().unwrap();
                assert_eq!(pts.len(), budget, "{kind}");
                assert!(pts.iter().all(|p| bounds.contains(p)), "{kind}");
                for w in out.trajectory.evaluations().windows(2) {
                    assert!(w[1].best_so_far <= w[0].best_so_far);
                }
            }
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let obj = sphere(4);
        for kind in OptimizerKind::ALL {
            let a = optimize(&obj, 300, &OptimizerConfig::new(kind, 11), "t").unwrap();
            let b = optimize(&obj, 300, &OptimizerConfig::new(kind, 11), "t").unwrap();
            let c = optimize(&obj, 300, &OptimizerConfig::new(kind, 12), "t").unwrap();
            assert_eq!(a, b, "{kind}");
            assert_ne!(a.trajectory, c.trajectory, "{kind}");
        }
    }

    #[test]
    fn objective_errors_surface() {
        struct Broken(Bounds);
        impl Objective for Broken {
            fn bounds(&self) -> &Bounds {
                &self.0
            }
            fn evaluate(&self, _: &[f64]) -> Result<f64, ProblemError> {
                Err(ProblemError::Config("boom".into()))
            }
        }
        let obj = Broken(Bounds::uniform(2, 0.0, 1.0));
        for kind in OptimizerKind::ALL {
            assert!(matches!(optimize(&obj, 50, &OptimizerConfig::new(kind, 0), "t"), Err(OptimizerError::Problem(_))));
        }
    }

    #[test]
    fn unit_space_mapping() {
        let obj = shifted_bowl(2);
        let mut f = Budgeted::new(&obj, 3, "t");
        let mut s = UnitSpace::new(&mut f);
        assert_eq!(s.to_real(&[0.25, 1.0]), vec![0.25, 1.0]);
        s.set_limit(2);
        assert!(s.eval(&[0.5, 0.5]).is_ok());
        assert!(s.eval(&[0.5, 0.5]).is_ok());
        assert!(matches!(s.eval(&[0.5, 0.5]), Err(Stop::Exhausted)));
        assert_eq!(f.used(), 2);
    }
}
