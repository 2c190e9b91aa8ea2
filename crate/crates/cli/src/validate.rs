//! Built-in physics and metric self-checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use photonopt_core::fmt::format_g;
use photonopt_core::materials::Materials;
use photonopt_core::metrics::{aocc, summarize_runs, AoccConfig, RunSummary};
use photonopt_core::problems::{BraggMirror, InstanceId, Objective, Problem, ProblemInstance, RunTrajectory};
use photonopt_core::tmm::{stack_response, ComplexIndex, LayerStack, PlaneWave, Polarization};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name, passed, detail: detail.into() }
}

fn reflectance(stack: &LayerStack, wl: f64, angle: f64, pol: Polarization) -> f64 {
    stack_response(stack, &PlaneWave::new(wl, angle, pol).expect("valid wave")).reflectance
}

fn energy_conservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut stack = LayerStack::new(ComplexIndex::lossless(rng.random_range(1.0..1.6)), ComplexIndex::lossless(rng.random_range(1.0..3.5)));
        for _ in 0..rng.random_range(1..12) {
            stack.push(rng.random_range(0.0..400.0), ComplexIndex::lossless(rng.random_range(1.0..4.0))).expect("valid layer");
        }
        for wl in [400.0, 500.0, 600.0, 700.0, 800.0] {
            for pol in [Polarization::S, Polarization::P] {
                let wave = PlaneWave::new(wl, rng.random_range(0.0..60.0), pol).expect("valid wave");
                let r = stack_response(&stack, &wave);
                worst = worst.max((r.reflectance + r.transmittance - 1.0).abs());
            }
        }
    }
    check("energy-conservation", worst < 1e-9, format!("max |R+T-1| = {} over 2000 cases", format_g(worst, 3)))
}

fn fresnel_normal() -> Check {
    let stack = LayerStack::new(ComplexIndex::lossless(1.0), ComplexIndex::lossless(1.5));
    let r = reflectance(&stack, 600.0, 0.0, Polarization::S);
    check("fresnel-normal", (r - 0.04).abs() < 1e-12, format!("R(1 -> 1.5) = {}", format_g(r, 17)))
}

fn brewster() -> Check {
    let stack = LayerStack::new(ComplexIndex::lossless(1.0), ComplexIndex::lossless(1.5));
    let angle = 1.5f64.atan().to_degrees();
    let rp = reflectance(&stack, 600.0, angle, Polarization::P);
    check("brewster", rp < 1e-12, format!("R_p at {:.4} deg = {}", angle, format_g(rp, 3)))
}

/// Fitness of the quarter-wave mini-Bragg mirror, evaluated twice.
pub fn quarter_wave_fitness() -> (f64, f64) {
    let inst = ProblemInstance::builtin(InstanceId::MiniBragg);
    let mirror = BraggMirror::for_instance(&inst).expect("builtin instance");
    let x = mirror.quarter_wave_point();
    (mirror.evaluate(&x).expect("in bounds"), mirror.evaluate(&x).expect("in bounds"))
}

fn quarter_wave() -> Check {
    let (a, b) = quarter_wave_fitness();
    check("quarter-wave-reference", (a - b).abs() <= 1e-12 && a > 0.0 && a < 1.0, format!("f_qw = {}", format_g(a, 17)))
}

fn aocc_cases() -> Check {
    let lin = AoccConfig::linear(0.0, 1.0);
    let two = aocc(&RunTrajectory::from_raw("t", [0.5, 0.25]), &lin, 2);
    let top = aocc(&RunTrajectory::from_raw("t", [1.0; 4]), &lin, 4);
    let bottom = aocc(&RunTrajectory::from_raw("t", [0.0; 4]), &lin, 4);
    let runs = [0.4, 0.6].map(|a| RunSummary { aocc: a, y_best: 0.0, n_evals: 1 });
    let stats = summarize_runs(&runs);
    let ok = two.as_ref().is_ok_and(|v| *v == 0.625)
        && top.as_ref().is_ok_and(|v| *v == 0.0)
        && bottom.as_ref().is_ok_and(|v| *v == 1.0)
        && stats.as_ref().is_ok_and(|s| (s.aocc_mean - 0.5).abs() < 1e-15 && (s.aocc_std - 0.1).abs() < 1e-15);
    check("aocc-hand-cases", ok, format!("(0.5, 0.25) -> {:?}; endpoints {:?}/{:?}", two.ok(), top.ok(), bottom.ok()))
}

fn ellipsometry_truth(m: &Materials) -> Check {
    let inst = ProblemInstance::builtin(InstanceId::Ellipsometry);
    let truth = inst.truth.expect("builtin truth");
    match Problem::from_instance(&inst, m) {
        Ok(p) => {
            let at = p.evaluate(&[truth.thickness, truth.permittivity]).unwrap_or(f64::NAN);
            let off = p.evaluate(&[truth.thickness + 10.0, truth.permittivity]).unwrap_or(f64::NAN);
            check("ellipsometry-truth", at < 1e-12 && off > 1e-6, format!("cost at truth {}, 10 nm away {}", format_g(at, 3), format_g(off, 3)))
        }
        Err(e) => check("ellipsometry-truth", false, e.to_string()),
    }
}

fn photovoltaic_range(m: &Materials) -> Check {
    let inst = ProblemInstance::builtin(InstanceId::Photovoltaic);
    match Problem::from_instance(&inst, m).and_then(|p| p.evaluate(&inst.bounds.center())) {
        Ok(f) => check("photovoltaic-range", f > 0.0 && f < 1.0, format!("fitness at box center {}", format_g(f, 6))),
        Err(e) => check("photovoltaic-range", false, e.to_string()),
    }
}

/// Runs every check. `materials` is the result of loading the configured data directory.
pub fn run_checks(materials: Result<Materials, String>, source: &str) -> Vec<Check> {
    let mut checks = vec![energy_conservation(), fresnel_normal(), brewster(), quarter_wave(), aocc_cases()];
    match materials {
        Ok(m) => {
            checks.push(check("data-tables", true, format!("gold, silicon and AM1.5 tables from {source}")));
            checks.push(ellipsometry_truth(&m));
            checks.push(photovoltaic_range(&m));
        }
        Err(e) => checks.push(check("data-tables", false, format!("{source}: {e}"))),
    }
    checks
}
