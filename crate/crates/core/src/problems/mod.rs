//! The photonic benchmark objectives and their budgeted wrappers.
//!
//! Every objective is a minimization black box over a box-constrained domain. Inputs outside
//! the box are contract errors rather than being clamped, so optimizer bound-handling bugs
//! surface immediately.

mod budget;
mod instance;
mod objectives;

pub use budget::{Budgeted, EvalError, Evaluation, EvaluationCounter, RunTrajectory};
pub use instance::{EllipsometryTruth, Family, InstanceId, ProblemInstance};
pub use objectives::{
    BraggMirror, EllipsometryCost, EllipsometryFit, Photovoltaic, BRAGG_WAVELENGTH, ELLIPSOMETRY_ANGLE,
    ELLIPSOMETRY_POINTS, PV_POINTS, SILICON_THICKNESS,
};

use thiserror::Error;

use crate::materials::{DataError, Materials};
use crate::tmm::OpticsError;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {index} = {value} outside [{lower}, {upper}]")]
    OutOfBounds { index: usize, value: f64, lower: f64, upper: f64 },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("instance config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(ProblemError::InvalidBounds(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(ProblemError::InvalidBounds(format!("coordinate {i}: [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Self::new(vec![lower; dim], vec![upper; dim]).expect("uniform bounds")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    pub fn check(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (index, ((&value, &lower), &upper)) in x.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            if !(value >= lower && value <= upper) {
                return Err(ProblemError::OutOfBounds { index, value, lower, upper });
            }
        }
        Ok(())
    }
}

/// A box-constrained minimization objective.
pub trait Objective: Send + Sync {
    fn bounds(&self) -> &Bounds;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError>;
}

/// Adapts a closure to [`Objective`]; the closure is only called on in-bounds points.
pub struct FnObjective<F> {
    bounds: Bounds,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(bounds: Bounds, f: F) -> Self {
        Self { bounds, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.bounds.check(x)?;
        Ok((self.f)(x))
    }
}

/// One of the three photonic objectives, built for a concrete instance.
#[derive(Debug, Clone)]
pub enum Problem {
    Bragg(BraggMirror),
    Ellipsometry(EllipsometryFit),
    Photovoltaic(Photovoltaic),
}

impl Problem {
    pub fn from_instance(instance: &ProblemInstance, materials: &Materials) -> Result<Self, ProblemError> {
        Ok(match instance.id.family() {
            Family::Bragg => Problem::Bragg(BraggMirror::for_instance(instance)?),
            Family::Ellipsometry => Problem::Ellipsometry(EllipsometryFit::for_instance(instance, materials)?),
            Family::Photovoltaic => Problem::Photovoltaic(Photovoltaic::for_instance(instance, materials)?),
        })
    }
}

impl Objective for Problem {
    fn bounds(&self) -> &Bounds {
        match self {
            Problem::Bragg(p) => p.bounds(),
            Problem::Ellipsometry(p) => p.bounds(),
            Problem::Photovoltaic(p) => p.bounds(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        match self {
            Problem::Bragg(p) => p.evaluate(x),
            Problem::Ellipsometry(p) => p.evaluate(x),
            Problem::Photovoltaic(p) => p.evaluate(x),
        }
    }
}
