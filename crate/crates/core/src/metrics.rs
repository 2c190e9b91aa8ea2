//! Anytime-performance metrics and run logs.
//!
//! AOCC (area over the convergence curve) averages `1 - normalized(best_so_far_i)` over the
//! whole budget. Runs that stop early are padded with their last best-so-far value.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fmt::format_g;
use crate::problems::{Evaluation, RunTrajectory};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("no run summaries to aggregate")]
    NoSummaries,
    #[error("invalid AOCC bounds: lb={lb}, ub={ub}{}", if *.log_scale { " (log scale needs lb > 0)" } else { "" })]
    InvalidBounds { lb: f64, ub: f64, log_scale: bool },
    #[error("budget {budget} is smaller than the trajectory length {len}")]
    BudgetTooSmall { budget: usize, len: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run csv line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoccConfig {
    pub lb: f64,
    pub ub: f64,
    pub log_scale: bool,
}

impl AoccConfig {
    pub fn linear(lb: f64, ub: f64) -> Self {
        Self { lb, ub, log_scale: false }
    }

    pub fn log(lb: f64, ub: f64) -> Self {
        Self { lb, ub, log_scale: true }
    }

    fn validate(&self) -> Result<(), MetricsError> {
        let ok = self.lb < self.ub && self.lb.is_finite() && self.ub.is_finite() && (!self.log_scale || self.lb > 0.0);
        if ok {
            Ok(())
        } else {
            Err(MetricsError::InvalidBounds { lb: self.lb, ub: self.ub, log_scale: self.log_scale })
        }
    }
}

/// Area over the convergence curve in `[0, 1]`; 1 is ideal.
pub fn aocc(trajectory: &RunTrajectory, cfg: &AoccConfig, budget: usize) -> Result<f64, MetricsError> {
    cfg.validate()?;
    let evals = trajectory.evaluations();
    let last = evals.last().ok_or(MetricsError::EmptyTrajectory)?.best_so_far;
    if budget < evals.len() {
        return Err(MetricsError::BudgetTooSmall { budget, len: evals.len() });
    }
    let (lo, hi) = if cfg.log_scale { (cfg.lb.log10(), cfg.ub.log10()) } else { (cfg.lb, cfg.ub) };
    let span = hi - lo;
    let score = |s: f64| {
        let clipped = s.max(cfg.lb).min(cfg.ub);
        let v = if cfg.log_scale { clipped.log10() } else { clipped };
        1.0 - (v - lo) / span
    };
    let observed: f64 = evals.iter().map(|e| score(e.best_so_far)).sum();
    let padded = (budget - evals.len()) as f64 * score(last);
    Ok((observed + padded) / budget as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub aocc: f64,
    pub y_best: f64,
    pub n_evals: usize,
}

impl RunSummary {
    pub fn from_trajectory(trajectory: &RunTrajectory, cfg: &AoccConfig, budget: usize) -> Result<Self, MetricsError> {
        Ok(Self {
            aocc: aocc(trajectory, cfg, budget)?,
            y_best: trajectory.best().ok_or(MetricsError::EmptyTrajectory)?,
            n_evals: trajectory.len(),
        })
    }
}

/// Mean and population standard deviation of AOCC and final best fitness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub aocc_mean: f64,
    pub aocc_std: f64,
    pub y_best_mean: f64,
    pub y_best_std: f64,
}

// Shifted by the first value so that identical runs give exactly zero spread.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let first = values.clone().next().unwrap_or(0.0);
    let shift = values.clone().map(|v| v - first).sum::<f64>() / n;
    let var = values.map(|v| (v - first - shift).powi(2)).sum::<f64>() / n;
    (first + shift, var.sqrt())
}

pub fn summarize_runs(summaries: &[RunSummary]) -> Result<RunStats, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::NoSummaries);
    }
    let (aocc_mean, aocc_std) = mean_std(summaries.iter().map(|s| s.aocc));
    let (y_best_mean, y_best_std) = mean_std(summaries.iter().map(|s| s.y_best));
    Ok(RunStats { aocc_mean, aocc_std, y_best_mean, y_best_std })
}

/// Metadata written as `# key=value` lines above the run table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMeta {
    pub instance: String,
    pub algorithm: String,
    pub run_id: usize,
    pub budget: usize,
    pub seed: u64,
}

pub const RUN_CSV_HEADER: &str = "evaluation,raw_fitness,best_so_far";

pub fn format_run_csv(trajectory: &RunTrajectory, meta: &RunMeta) -> String {
    let mut out = String::with_capacity(64 * (trajectory.len() + 6));
    out.push_str(&format!("# instance={}\n", meta.instance));
    out.push_str(&format!("# algorithm={}\n", meta.algorithm));
    out.push_str(&format!("# run_id={}\n", meta.run_id));
    out.push_str(&format!("# budget={}\n", meta.budget));
    out.push_str(&format!("# seed={}\n", meta.seed));
    out.push_str(RUN_CSV_HEADER);
    out.push('\n');
    for e in trajectory.evaluations() {
        out.push_str(&format!("{},{},{}\n", e.index, format_g(e.raw, 17), format_g(e.best_so_far, 17)));
    }
    out
}

pub fn emit_run_csv(path: &Path, trajectory: &RunTrajectory, meta: &RunMeta) -> Result<(), MetricsError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| MetricsError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, format_run_csv(trajectory, meta)).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })
}

pub fn parse_run_csv(text: &str) -> Result<(RunMeta, RunTrajectory), MetricsError> {
    let mut meta = RunMeta { instance: String::new(), algorithm: String::new(), run_id: 0, budget: 0, seed: 0 };
    let mut evals = Vec::new();
    let mut header_seen = false;
    let bad = |line: usize, message: String| MetricsError::Parse { line, message };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(kv) = line.strip_prefix('#') {
            let (k, v) = kv.trim().split_once('=').ok_or_else(|| bad(line_no, "expected key=value".into()))?;
            let num = |v: &str| v.parse::<u64>().map_err(|e| bad(line_no, e.to_string()));
            match k {
                "instance" => meta.instance = v.to_string(),
                "algorithm" => meta.algorithm = v.to_string(),
                "run_id" => meta.run_id = num(v)? as usize,
                "budget" => meta.budget = num(v)? as usize,
                "seed" => meta.seed = num(v)?,
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line != RUN_CSV_HEADER {
                return Err(bad(line_no, format!("expected `{RUN_CSV_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(line_no, "expected 3 fields".into()));
        }
        let index = fields[0].parse().map_err(|_| bad(line_no, "bad evaluation index".into()))?;
        let raw = fields[1].parse().map_err(|_| bad(line_no, "bad raw fitness".into()))?;
        let best_so_far = fields[2].parse().map_err(|_| bad(line_no, "bad best-so-far".into()))?;
        evals.push(Evaluation { index, raw, best_so_far });
    }
    if !header_seen {
        return Err(bad(0, "missing table header".into()));
    }
    let trajectory = RunTrajectory::from_evaluations(meta.instance.clone(), evals).map_err(|m| bad(0, m))?;
    Ok((meta, trajectory))
}

pub fn read_run_csv(path: &Path) -> Result<(RunMeta, RunTrajectory), MetricsError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })?;
    parse_run_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct transcription of the definition with no padding shortcut.
    fn brute_force_aocc(best: &[f64], lb: f64, ub: f64, budget: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..budget {
            let y = if i < best.len() { best[i] } else { best[best.len() - 1] };
            total += 1.0 - (y.max(lb).min(ub) - lb) / (ub - lb);
        }
        total / budget as f64
    }

    #[test]
    fn identical_runs_have_zero_spread() {
        let s = RunSummary { aocc: 0.1 + 0.2, y_best: 1.0 / 3.0, n_evals: 5 };
        let stats = summarize_runs(&[s; 7]).unwrap();
        assert_eq!((stats.aocc_mean, stats.aocc_std), (0.1 + 0.2, 0.0));
        assert_eq!((stats.y_best_mean, stats.y_best_std), (1.0 / 3.0, 0.0));
    }

    #[test]
    fn clip_endpoints() {
        let cfg = AoccConfig::linear(0.0, 1.0);
        let at_ub = RunTrajectory::from_raw("t", [1.0, 1.0, 1.0]);
        let at_lb = RunTrajectory::from_raw("t", [0.0, 0.0, 0.0]);
        assert_eq!(aocc(&at_ub, &cfg, 3).unwrap(), 0.0);
        assert_eq!(aocc(&at_lb, &cfg, 3).unwrap(), 1.0);
        let above = RunTrajectory::from_raw("t", [5.0]);
        assert_eq!(aocc(&above, &cfg, 10).unwrap(), 0.0);
    }

    #[test]
    fn two_step_hand_case() {
        let t = RunTrajectory::from_raw("t", [0.5, 0.25]);
        assert_eq!(aocc(&t, &AoccConfig::linear(0.0, 1.0), 2).unwrap(), 0.625);
    }

    #[test]
    fn log_scale() {
        let cfg = AoccConfig::log(1e-4, 1.0);
        let t = RunTrajectory::from_raw("t", [1e-2]);
        assert!((aocc(&t, &cfg, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(aocc(&t, &AoccConfig::log(0.0, 1.0), 1), Err(MetricsError::InvalidBounds { .. })));
    }

    #[test]
    fn errors() {
        let cfg = AoccConfig::linear(0.0, 1.0);
        assert!(matches!(aocc(&RunTrajectory::new("t"), &cfg, 5), Err(MetricsError::EmptyTrajectory)));
        let t = RunTrajectory::from_raw("t", [0.3]);
        assert!(matches!(aocc(&t, &AoccConfig::linear(1.0, 1.0), 5), Err(MetricsError::InvalidBounds { .. })));
        assert!(matches!(summarize_runs(&[]), Err(MetricsError::NoSummaries)));
    }

    #[test]
    fn random_trajectories_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let len = rng.random_range(1..=100);
            let raw: Vec<f64> = (0..len).map(|_| rng.random_range(-0.2..1.3)).collect();
            let t = RunTrajectory::from_raw("t", raw);
            let best: Vec<f64> = t.best_so_far().collect();
            let budget = len + rng.random_range(0..50);
            let expected = brute_force_aocc(&best, 0.0, 1.0, budget);
            assert!((aocc(&t, &AoccConfig::linear(0.0, 1.0), budget).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn summary_statistics() {
        let s = |aocc: f64, y: f64| RunSummary { aocc, y_best: y, n_evals: 1 };
        let one = summarize_runs(&[s(0.7, 0.1)]).unwrap();
        assert_eq!((one.aocc_mean, one.aocc_std), (0.7, 0.0));
        let two = summarize_runs(&[s(0.4, 0.0), s(0.6, 0.0)]).unwrap();
        assert!((two.aocc_mean - 0.5).abs() < 1e-15 && (two.aocc_std - 0.1).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let runs: Vec<RunSummary> = (0..5).map(|_| s(rng.random(), rng.random())).collect();
        let stats = summarize_runs(&runs).unwrap();
        let m: f64 = runs.iter().map(|r| r.aocc).sum::<f64>() / 5.0;
        let sd = (runs.iter().map(|r| (r.aocc - m).powi(2)).sum::<f64>() / 5.0).sqrt();
        let my: f64 = runs.iter().map(|r| r.y_best).sum::<f64>() / 5.0;
        let sdy = (runs.iter().map(|r| (r.y_best - my).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!((stats.aocc_mean - m).abs() < 1e-15 && (stats.aocc_std - sd).abs() < 1e-15);
        assert!((stats.y_best_mean - my).abs() < 1e-15 && (stats.y_best_std - sdy).abs() < 1e-15);
    }

    fn meta() -> RunMeta {
        RunMeta { instance: "mini-bragg".into(), algorithm: "de".into(), run_id: 2, budget: 10, seed: 44 }
    }

    #[test]
    fn csv_layout() {
        let t = RunTrajectory::from_raw("mini-bragg", [0.5, 0.7, 0.25]);
        let text = format_run_csv(&t, &meta());
        assert_eq!(
            text,
            "# instance=mini-bragg\n# algorithm=de\n# run_id=2\n# budget=10\n# seed=44\n\
             evaluation,raw_fitness,best_so_far\n1,0.5,0.5\n2,0.69999999999999996,0.5\n3,0.25,0.25\n"
        );
        assert_eq!(text, format_run_csv(&t, &meta()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/run.csv");
        emit_run_csv(&path, &t, &meta()).unwrap();
        let (m, back) = read_run_csv(&path).unwrap();
        assert_eq!((m, back), (meta(), t));
    }

    proptest! {
        #[test]
        fn csv_round_trip(raw in proptest::collection::vec(-1e6f64..1e6, 1..60)) {
            let t = RunTrajectory::from_raw("mini-bragg", raw);
            let (m, back) = parse_run_csv(&format_run_csv(&t, &meta())).unwrap();
            prop_assert_eq!(m, meta());
            prop_assert_eq!(back, t);
        }

        #[test]
        fn aocc_is_monotone_under_domination(raw in proptest::collection::vec(0.0f64..1.2, 1..80), shift in proptest::collection::vec(0.0f64..0.3, 80), extra in 0usize..40) {
            let a = RunTrajectory::from_raw("t", raw.clone());
            let b = RunTrajectory::from_raw("t", raw.iter().zip(&shift).map(|(r, s)| r + s));
            let cfg = AoccConfig::linear(0.0, 1.0);
            let budget = raw.len() + extra;
            prop_assert!(aocc(&a, &cfg, budget).unwrap() >= aocc(&b, &cfg, budget).unwrap() - 1e-12);
            prop_assert!((0.0..=1.0).contains(&aocc(&a, &cfg, budget).unwrap()));
        }

        #[test]
        fn padding_never_beats_continuation(raw in proptest::collection::vec(0.0f64..1.0, 1..50), more in proptest::collection::vec(0.0f64..1.0, 0..50)) {
            let cfg = AoccConfig::linear(0.0, 1.0);
            let budget = raw.len() + more.len();
            let early = RunTrajectory::from_raw("t", raw.clone());
            let full = RunTrajectory::from_raw("t", raw.into_iter().chain(more));
            prop_assert!(aocc(&early, &cfg, budget).unwrap() <= aocc(&full, &cfg, budget).unwrap() + 1e-12);
        }

        #[test]
        fn floor_makes_later_evaluations_irrelevant(raw in proptest::collection::vec(0.1f64..1.0, 1..30), tail in proptest::collection::vec(-1.0f64..1.0, 1..30)) {
            let cfg = AoccConfig::linear(0.0, 1.0);
            let mut head = raw.clone();
            head.push(-0.5);
            let budget = head.len() + tail.len();
            let a = RunTrajectory::from_raw("t", head.clone());
            let b = RunTrajectory::from_raw("t", head.into_iter().chain(tail));
            prop_assert!((aocc(&a, &cfg, budget).unwrap() - aocc(&b, &cfg, budget).unwrap()).abs() < 1e-12);
        }
    }
}
