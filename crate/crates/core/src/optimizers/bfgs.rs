//! Box-projected BFGS with forward-difference gradients and random restarts.

use nalgebra::{DMatrix, DVector};

use super::{finish, uniform_point, OptimizerConfig, OptimizerError, Stop, UnitSpace};
use crate::problems::Budgeted;

/// Finite-difference step in unit-cube coordinates (a fraction of each box width).
pub const FD_STEP: f64 = 1e-6;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const FIRST_STEP: f64 = 0.1;
const STALL_LIMIT: usize = 3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BfgsStats {
    /// Number of completed local searches (each restart starts a new one).
    pub local_searches: usize,
}

/// One-sided difference gradient of `f` at `x` (value `fx` already known), costing
/// `x.len()` evaluations. Coordinates within `h` of the upper limit `hi` step backwards.
pub fn finite_difference_gradient<F, E>(mut f: F, x: &[f64], fx: f64, h: f64, hi: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let step = if x[i] + h <= hi { h } else { -h };
        probe[i] = x[i] + step;
        let fi = f(&probe)?;
        probe[i] = x[i];
        g.push((fi - fx) / step);
    }
    Ok(g)
}

fn gradient(space: &mut UnitSpace, x: &DVector<f64>, fx: f64) -> Result<DVector<f64>, Stop> {
    let g = finite_difference_gradient(|p| space.eval(p), x.as_slice(), fx, FD_STEP, 1.0)?;
    Ok(DVector::from_vec(g))
}

/// Zeroes direction components that would leave the unit cube from an active face.
fn free_direction(x: &DVector<f64>, p: &mut DVector<f64>) {
    for i in 0..x.len() {
        if (x[i] <= 0.0 && p[i] < 0.0) || (x[i] >= 1.0 && p[i] > 0.0) {
            p[i] = 0.0;
        }
    }
}

fn project(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| v.clamp(0.0, 1.0))
}

/// A single local search from `start` in the unit cube. Returns when it converges or stalls;
/// budget exhaustion surfaces as `Stop::Exhausted`.
pub(crate) fn bfgs_from(space: &mut UnitSpace, start: Vec<f64>) -> Result<(), Stop> {
    let d = start.len();
    let mut x = project(&DVector::from_vec(start));
    let mut fx = space.eval(x.as_slice())?;
    let mut g = gradient(space, &x, fx)?;
    let mut h = DMatrix::<f64>::identity(d, d);
    let mut fresh = true;
    let mut stalls = 0;
    loop {
        let mut p = -(&h * &g);
        free_direction(&x, &mut p);
        if g.dot(&p) >= 0.0 {
            h = DMatrix::identity(d, d);
            fresh = true;
            p = -g.clone();
            free_direction(&x, &mut p);
        }
        let slope = g.dot(&p);
        if !(slope < 0.0) {
            return Ok(());
        }
        if fresh {
            p *= FIRST_STEP / p.norm();
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let xn = project(&(&x + alpha * &p));
            let s = &xn - &x;
            if s.amax() < 1e-14 {
                break;
            }
            let fxn = space.eval(xn.as_slice())?;
            if fxn <= fx + ARMIJO_C1 * g.dot(&s) {
                accepted = Some((xn, s, fxn));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, s, fxn)) = accepted else {
            return Ok(());
        };

        let gn = gradient(space, &xn, fxn)?;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = DMatrix::identity(d, d) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (H y s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
            h -= rho * (&hy * s.transpose() + &s * hy.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
            fresh = false;
        }

        stalls = if fx - fxn <= 1e-14 * fx.abs().max(1e-300) { stalls + 1 } else { 0 };
        x = xn;
        fx = fxn;
        g = gn;
        if stalls >= STALL_LIMIT {
            return Ok(());
        }
    }
}

/// BFGS restarted from fresh uniform points until the budget is spent.
pub fn run_bfgs_restart(f: &mut Budgeted, cfg: &OptimizerConfig) -> Result<BfgsStats, OptimizerError> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut stats = BfgsStats::default();
    let mut space = UnitSpace::new(f);
    let r = (|| loop {
        let start = uniform_point(space.dim(), &mut rng);
        bfgs_from(&mut space, start)?;
        stats.local_searches += 1;
    })();
    finish(r)?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{optimize, OptimizerKind};
    use super::*;
    use crate::problems::{Bounds, FnObjective};

    #[test]
    fn linear_gradient() {
        let f = |x: &[f64]| -> Result<f64, ()> { Ok(3.0 * x[0] - 2.0 * x[1] + 0.5) };
        let x = [0.2, 0.7];
        let g = finite_difference_gradient(f, &x, f(&x).unwrap(), FD_STEP, 1.0).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-4 && (g[1] + 2.0).abs() < 1e-4);
        // At the upper face the difference is taken backwards.
        let x = [1.0, 1.0];
        let g = finite_difference_gradient(f, &x, f(&x).unwrap(), FD_STEP, 1.0).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-4 && (g[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn quadratic_converges_in_first_search() {
        let obj = shifted_bowl(2);
        let mut f = Budgeted::new(&obj, 10_000, "t");
        let mut space = UnitSpace::new(&mut f);
        finish(bfgs_from(&mut space, vec![0.05, 0.9])).unwrap();
        let used = f.used();
        let (x, y) = f.best().unwrap();
        assert!(x.iter().all(|v| (v - 0.5).abs() < 1e-5), "{x:?}");
        assert!(y < 1e-10);
        assert!(used < 200, "{used}");
    }

    #[test]
    fn projection_finds_corner_minimum() {
        let obj = FnObjective::new(Bounds::uniform(3, 0.0, 2.0), |x: &[f64]| {
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2) + (x[2] - 1.0).powi(2)
        });
        let out = optimize(&obj, 500, &OptimizerConfig::new(OptimizerKind::BfgsRestart, 2), "t").unwrap();
        assert!((out.best_x[0] - 2.0).abs() < 1e-9 && out.best_x[1].abs() < 1e-9);
        assert!((out.best_x[2] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn restarts_continue_until_budget() {
        let obj = shifted_bowl(2);
        let mut f = Budgeted::new(&obj, 3_000, "t");
        let stats = run_bfgs_restart(&mut f, &OptimizerConfig::new(OptimizerKind::BfgsRestart, 8)).unwrap();
        assert_eq!(f.used(), 3_000);
        assert!(stats.local_searches > 1);
    }

    #[test]
    fn rosenbrock_progress() {
        let obj = FnObjective::new(Bounds::uniform(2, -2.0, 2.0), |x: &[f64]| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        });
        let out = optimize(&obj, 3000, &OptimizerConfig::new(OptimizerKind::BfgsRestart, 1), "t").unwrap();
        assert!(out.best_fitness < 1e-6, "{}", out.best_fitness);
    }
}
