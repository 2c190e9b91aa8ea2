//! Seeded benchmark plans and 2-D landscape scans.
//!
//! Run `k` of every (algorithm, instance) cell uses seed `base_seed + k`. Outputs land in
//! `<out>/runs/<instance>/<algorithm>/run_<k>.csv`, `<out>/aggregate.csv` and
//! `<out>/failures.csv`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::fmt::format_g;
use crate::materials::Materials;
use crate::metrics::{emit_run_csv, summarize_runs, AoccConfig, MetricsError, RunMeta, RunSummary};
use crate::optimizers::{optimize, OptimizerConfig};
use crate::parallel::{map_range, map_with_workers, Parallelism};
use crate::problems::{InstanceId, Objective, Problem, ProblemError, ProblemInstance, RunTrajectory};
use crate::sandbox::{run_candidate, RunStatus, SandboxConfig, Task};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("plan: {0}")]
    Plan(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("coordinate {index} out of range for a {dim}-dimensional instance")]
    CoordOutOfRange { index: usize, dim: usize },
    #[error("landscape needs two distinct coordinates and grid >= 2")]
    BadLandscape,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmSource {
    Optimizer(OptimizerConfig),
    /// External ask/tell candidate launched with this argv.
    Candidate { command: Vec<String>, timeout: Duration },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub name: String,
    pub source: AlgorithmSource,
}

impl AlgorithmSpec {
    pub fn optimizer(cfg: OptimizerConfig) -> Self {
        Self { name: cfg.kind.to_string(), source: AlgorithmSource::Optimizer(cfg) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub name: String,
    pub instances: Vec<ProblemInstance>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub runs: usize,
    pub base_seed: u64,
    pub budget_override: Option<usize>,
    pub log_scale: bool,
}

impl BenchPlan {
    pub fn new(name: impl Into<String>, instances: Vec<ProblemInstance>, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self { name: name.into(), instances, algorithms, runs: 15, base_seed: 0, budget_override: None, log_scale: false }
    }

    pub fn seed_for(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Parses a TOML plan. Instance entries are built-in ids or `.cfg` paths relative to
    /// `base_dir`; algorithm entries are optimizer names or tables.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, BenchError> {
        let bad = |m: String| BenchError::Plan(m);
        let mut table: toml::Table = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let name = match table.remove("name") {
            Some(toml::Value::String(s)) => s,
            None => "bench".to_string(),
            Some(v) => return Err(bad(format!("name must be a string, got {v}"))),
        };
        let runs = take_uint(&mut table, "runs")?.unwrap_or(15) as usize;
        let base_seed = take_uint(&mut table, "base_seed")?.unwrap_or(0);
        let budget_override = take_uint(&mut table, "budget_override")?.map(|b| b as usize);
        let log_scale = match table.remove("log_scale") {
            Some(toml::Value::Boolean(b)) => b,
            None => false,
            Some(v) => return Err(bad(format!("log_scale must be a boolean, got {v}"))),
        };
        let instances = match table.remove("instances") {
            Some(toml::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::String(s) => resolve_instance(&s, base_dir),
                    other => Err(bad(format!("instance entries are strings, got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => return Err(bad("`instances` array is required".into())),
        };
        let algorithms = match table.remove("algorithms") {
            Some(toml::Value::Array(items)) => items.into_iter().map(parse_algorithm).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(bad("`algorithms` array is required".into())),
        };
        if let Some(key) = table.keys().next() {
            return Err(bad(format!("unknown key `{key}`")));
        }
        let plan = Self { name, instances, algorithms, runs, base_seed, budget_override, log_scale };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Plan(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.instances.is_empty() || self.algorithms.is_empty() {
            return bad("plan needs at least one instance and one algorithm");
        }
        if self.budget_override == Some(0) {
            return bad("budget_override must be positive");
        }
        let mut names: Vec<&str> = self.algorithms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("algorithm names must be unique");
        }
        for a in &self.algorithms {
            if a.name.is_empty() || a.name.contains(['/', '\\']) || a.name.starts_with('.') {
                return Err(BenchError::Plan(format!("algorithm name `{}` is not usable as a directory", a.name)));
            }
            if let AlgorithmSource::Optimizer(cfg) = &a.source {
                cfg.validate().map_err(|e| BenchError::Plan(format!("{}: {e}", a.name)))?;
            }
        }
        Ok(())
    }

    fn budget_for(&self, instance: &ProblemInstance) -> usize {
        self.budget_override.unwrap_or(instance.budget)
    }
}

fn take_uint(table: &mut toml::Table, key: &str) -> Result<Option<u64>, BenchError> {
    match table.remove(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
        Some(v) => Err(BenchError::Plan(format!("{key} must be a non-negative integer, got {v}"))),
    }
}

fn resolve_instance(entry: &str, base_dir: &Path) -> Result<ProblemInstance, BenchError> {
    if let Ok(id) = entry.parse::<InstanceId>() {
        return Ok(ProblemInstance::builtin(id));
    }
    let path = base_dir.join(entry);
    if path.exists() {
        return Ok(ProblemInstance::load_cfg(&path)?);
    }
    Err(BenchError::Plan(format!("`{entry}` is neither a known instance nor a config file")))
}

fn parse_algorithm(v: toml::Value) -> Result<AlgorithmSpec, BenchError> {
    let bad = |m: String| BenchError::Plan(m);
    let mut t = match v {
        toml::Value::String(s) => {
            let kind = s.parse().map_err(|e| bad(format!("{e}")))?;
            return Ok(AlgorithmSpec::optimizer(OptimizerConfig::new(kind, 0)));
        }
        toml::Value::Table(t) => t,
        other => return Err(bad(format!("algorithm entries are strings or tables, got {other}"))),
    };
    let name = match t.remove("name") {
        Some(toml::Value::String(s)) => Some(s),
        None => None,
        Some(v) => return Err(bad(format!("algorithm name must be a string, got {v}"))),
    };
    if let Some(cmd) = t.remove("command") {
        let command: Vec<String> = cmd.try_into().map_err(|e| bad(format!("command: {e}")))?;
        if command.is_empty() {
            return Err(bad("command must not be empty".into()));
        }
        let timeout = match t.remove("timeout_secs") {
            None => crate::sandbox::DEFAULT_TIMEOUT,
            Some(toml::Value::Integer(s)) if s > 0 => Duration::from_secs(s as u64),
            Some(toml::Value::Float(s)) if s > 0.0 => Duration::from_secs_f64(s),
            Some(v) => return Err(bad(format!("timeout_secs must be positive, got {v}"))),
        };
        if let Some(key) = t.keys().next() {
            return Err(bad(format!("unknown candidate key `{key}`")));
        }
        let name = name.ok_or_else(|| bad("candidate algorithms need a name".into()))?;
        return Ok(AlgorithmSpec { name, source: AlgorithmSource::Candidate { command, timeout } });
    }
    let cfg: OptimizerConfig = toml::Value::Table(t).try_into().map_err(|e| bad(format!("optimizer: {e}")))?;
    Ok(AlgorithmSpec { name: name.unwrap_or_else(|| cfg.kind.to_string()), source: AlgorithmSource::Optimizer(cfg) })
}

/// Outcome of one (algorithm, instance, run) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub algorithm: String,
    pub instance: InstanceId,
    pub run_id: usize,
    pub seed: u64,
    pub outcome: Result<CellSuccess, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSuccess {
    pub summary: RunSummary,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub instance: InstanceId,
    pub algorithm: String,
    pub runs: usize,
    pub failed_runs: usize,
    pub stats: Option<crate::metrics::RunStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub out_dir: PathBuf,
    pub cells: Vec<CellResult>,
    pub aggregate: Vec<AggregateRow>,
}

impl BenchResult {
    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.outcome.is_err())
    }
}

pub fn run_path(out_dir: &Path, instance: InstanceId, algorithm: &str, run: usize) -> PathBuf {
    out_dir.join("runs").join(instance.as_str()).join(algorithm).join(format!("run_{run}.csv"))
}

fn run_cell(
    plan: &BenchPlan,
    problem: &Problem,
    instance: &ProblemInstance,
    algo: &AlgorithmSpec,
    run: usize,
    out_dir: &Path,
) -> Result<CellSuccess, String> {
    let seed = plan.seed_for(run);
    let budget = plan.budget_for(instance);
    let id = instance.id.as_str();
    let trajectory: RunTrajectory = match &algo.source {
        AlgorithmSource::Optimizer(cfg) => {
            let cfg = OptimizerConfig { seed, ..cfg.clone() };
            optimize(problem, budget, &cfg, id).map_err(|e| e.to_string())?.trajectory
        }
        AlgorithmSource::Candidate { command, timeout } => {
            let task = Task { objective: problem, instance_id: id, budget, seed };
            let sandbox = SandboxConfig { timeout: *timeout, ..Default::default() };
            let r = run_candidate(command, &task, &sandbox).map_err(|e| e.to_string())?;
            if r.status != RunStatus::Ok {
                return Err(format!("{}: {}", r.status, r.detail.unwrap_or_default()));
            }
            if r.trajectory.is_empty() {
                return Err("candidate made no evaluations".into());
            }
            r.trajectory
        }
    };
    let aocc_cfg = AoccConfig { lb: instance.aocc_lb, ub: instance.aocc_ub, log_scale: plan.log_scale };
    let summary = RunSummary::from_trajectory(&trajectory, &aocc_cfg, budget).map_err(|e| e.to_string())?;
    let path = run_path(out_dir, instance.id, &algo.name, run);
    let meta = RunMeta { instance: id.to_string(), algorithm: algo.name.clone(), run_id: run, budget, seed };
    emit_run_csv(&path, &trajectory, &meta).map_err(|e| e.to_string())?;
    Ok(CellSuccess { summary, path })
}

/// Executes every cell of `plan`, `workers` cells at a time. Failing cells are recorded,
/// never fatal.
pub fn run_bench(plan: &BenchPlan, materials: &Materials, out_dir: &Path, workers: usize) -> Result<BenchResult, BenchError> {
    plan.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let problems: Vec<Result<Problem, String>> = plan
        .instances
        .iter()
        .map(|inst| Problem::from_instance(inst, materials).map_err(|e| e.to_string()))
        .collect();
    let mut cells = Vec::new();
    for (ii, _) in plan.instances.iter().enumerate() {
        for (ai, _) in plan.algorithms.iter().enumerate() {
            for run in 0..plan.runs {
                cells.push((ii, ai, run));
            }
        }
    }
    let results = map_with_workers(&cells, workers, |&(ii, ai, run)| {
        let instance = &plan.instances[ii];
        let algo = &plan.algorithms[ai];
        let outcome = match &problems[ii] {
            Ok(problem) => run_cell(plan, problem, instance, algo, run, out_dir),
            Err(e) => Err(e.clone()),
        };
        CellResult { algorithm: algo.name.clone(), instance: instance.id, run_id: run, seed: plan.seed_for(run), outcome }
    });

    let mut aggregate = Vec::new();
    for (ii, instance) in plan.instances.iter().enumerate() {
        for (ai, algo) in plan.algorithms.iter().enumerate() {
            let start = (ii * plan.algorithms.len() + ai) * plan.runs;
            let block = &results[start..start + plan.runs];
            let ok: Vec<RunSummary> = block.iter().filter_map(|c| c.outcome.as_ref().ok().map(|s| s.summary)).collect();
            aggregate.push(AggregateRow {
                instance: instance.id,
                algorithm: algo.name.clone(),
                runs: ok.len(),
                failed_runs: plan.runs - ok.len(),
                stats: summarize_runs(&ok).ok(),
            });
        }
    }
    let result = BenchResult { out_dir: out_dir.to_path_buf(), cells: results, aggregate };
    write_aggregate(&result)?;
    Ok(result)
}

pub const AGGREGATE_HEADER: &str = "instance,algorithm,runs,failed_runs,aocc_mean,aocc_std,y_best_mean,y_best_std";

fn write_aggregate(result: &BenchResult) -> Result<(), BenchError> {
    let mut text = String::from(AGGREGATE_HEADER);
    text.push('\n');
    for row in &result.aggregate {
        let nums = match &row.stats {
            Some(s) => [s.aocc_mean, s.aocc_std, s.y_best_mean, s.y_best_std].map(|v| format_g(v, 17)).join(","),
            None => "nan,nan,nan,nan".to_string(),
        };
        text.push_str(&format!("{},{},{},{},{}\n", row.instance, row.algorithm, row.runs, row.failed_runs, nums));
    }
    let path = result.out_dir.join("aggregate.csv");
    fs::write(&path, text).map_err(io_err(&path))?;

    let mut fail = String::from("instance,algorithm,run_id,seed,error\n");
    for c in result.failures() {
        let msg = c.outcome.as_ref().err().map(|e| e.replace(['\n', '\r', ','], " ")).unwrap_or_default();
        fail.push_str(&format!("{},{},{},{},{}\n", c.instance, c.algorithm, c.run_id, c.seed, msg));
    }
    let path = result.out_dir.join("failures.csv");
    fs::write(&path, fail).map_err(io_err(&path))
}

/// Fitness on a `grid x grid` lattice over two coordinates; `values[a][b]` is the fitness at
/// `(xs[a], ys[b])`. Diagnostic only: no budget accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub coords: (usize, usize),
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fixed: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn evaluations(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Grid indices of the smallest value.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (a, row) in self.values.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if v < &self.values[best.0][best.1] {
                    best = (a, b);
                }
            }
        }
        best
    }

    pub fn to_csv(&self, instance: &str) -> String {
        let (i, j) = self.coords;
        let mut out = format!("# instance={instance}\n# coords={i},{j}\n# grid={}\n# budgeted=false\n", self.xs.len());
        let fixed: Vec<String> = self.fixed.iter().map(|v| format_g(*v, 17)).collect();
        out.push_str(&format!("# fixed={}\n", fixed.join(";")));
        out.push_str(&format!("x{i}\\x{j}"));
        for y in &self.ys {
            out.push(',');
            out.push_str(&format_g(*y, 17));
        }
        out.push('\n');
        for (x, row) in self.xs.iter().zip(&self.values) {
            out.push_str(&format_g(*x, 17));
            for v in row {
                out.push(',');
                out.push_str(&format_g(*v, 17));
            }
            out.push('\n');
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

/// Scans coordinates `(i, j)` with the others held at `fixed` (box midpoint by default).
pub fn landscape_scan(
    objective: &dyn Objective,
    coords: (usize, usize),
    grid: usize,
    fixed: Option<&[f64]>,
    mode: Parallelism,
) -> Result<Landscape, BenchError> {
    let bounds = objective.bounds();
    let dim = bounds.dim();
    let (i, j) = coords;
    for index in [i, j] {
        if index >= dim {
            return Err(BenchError::CoordOutOfRange { index, dim });
        }
    }
    if i == j || grid < 2 {
        return Err(BenchError::BadLandscape);
    }
    let base = match fixed {
        Some(f) => {
            bounds.check(f)?;
            f.to_vec()
        }
        None => bounds.center(),
    };
    let xs = linspace(bounds.lower()[i], bounds.upper()[i], grid);
    let ys = linspace(bounds.lower()[j], bounds.upper()[j], grid);
    let rows = map_range(grid, mode, |a| {
        let mut p = base.clone();
        p[i] = xs[a];
        ys.iter()
            .map(|&y| {
                p[j] = y;
                objective.evaluate(&p)
            })
            .collect::<Result<Vec<f64>, ProblemError>>()
    });
    let values = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Landscape { coords, xs, ys, fixed: base, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::OptimizerKind;
    use crate::problems::{Bounds, EllipsometryTruth, FnObjective};
    use std::sync::atomic::{AtomicUsize, Ordering};

    const PLAN: &str = r#"
name = "smoke"
instances = ["mini-bragg"]
runs = 2
base_seed = 10
budget_override = 300

[[algorithms]]
kind = "de"
"#;

    #[test]
    fn plan_parsing() {
        let plan = BenchPlan::from_toml(PLAN, Path::new(".")).unwrap();
        assert_eq!(plan.name, "smoke");
        assert_eq!(plan.runs, 2);
        assert_eq!(plan.seed_for(1), 11);
        assert_eq!(plan.algorithms[0].name, "de");
        let short = BenchPlan::from_toml("instances = [\"bragg\"]\nalgorithms = [\"qode\", \"cma-es\"]\n", Path::new(".")).unwrap();
        assert_eq!(short.runs, 15);
        assert_eq!(short.algorithms.len(), 2);
        let cand = BenchPlan::from_toml(
            "instances = [\"bragg\"]\n[[algorithms]]\nname = \"mine\"\ncommand = [\"python3\", \"c.py\"]\ntimeout_secs = 5\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(
            cand.algorithms[0].source,
            AlgorithmSource::Candidate { command: vec!["python3".into(), "c.py".into()], timeout: Duration::from_secs(5) }
        );
        for bad in [
            "instances = [\"nope\"]\nalgorithms = [\"de\"]\n",
            "instances = [\"bragg\"]\nalgorithms = [\"pso\"]\n",
            "instances = [\"bragg\"]\nalgorithms = [\"de\"]\nruns = 0\n",
            "instances = [\"bragg\"]\nalgorithms = [\"de\", \"de\"]\n",
            "instances = [\"bragg\"]\nalgorithms = [\"de\"]\nextra = 1\n",
            "instances = [\"bragg\"]\n[[algorithms]]\nkind = \"de\"\nde_f = 9.0\n",
        ] {
            assert!(BenchPlan::from_toml(bad, Path::new(".")).is_err(), "{bad}");
        }
    }

    #[test]
    fn instance_paths_resolve_relative_to_plan() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("instances");
        let plan = BenchPlan::from_toml("instances = [\"ellipsometry.cfg\"]\nalgorithms = [\"de\"]\n", &dir).unwrap();
        assert_eq!(plan.instances[0], ProblemInstance::builtin(InstanceId::Ellipsometry));
    }

    #[test]
    fn small_plan_outputs_and_determinism() {
        let plan = BenchPlan::from_toml(PLAN, Path::new(".")).unwrap();
        let m = Materials::embedded();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_bench(&plan, &m, a.path(), 2).unwrap();
        let rb = run_bench(&plan, &m, b.path(), 1).unwrap();
        assert_eq!(ra.aggregate, rb.aggregate);
        for run in 0..2 {
            let pa = run_path(a.path(), InstanceId::MiniBragg, "de", run);
            let pb = run_path(b.path(), InstanceId::MiniBragg, "de", run);
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
        let agg = fs::read_to_string(a.path().join("aggregate.csv")).unwrap();
        assert_eq!(agg.lines().count(), 2);
        assert_eq!(agg, fs::read_to_string(b.path().join("aggregate.csv")).unwrap());
        assert_eq!(ra.failures().count(), 0);
    }

    #[test]
    fn failing_cells_are_recorded_not_fatal() {
        let mut plan = BenchPlan::from_toml(PLAN, Path::new(".")).unwrap();
        plan.algorithms.push(AlgorithmSpec {
            name: "broken".into(),
            source: AlgorithmSource::Candidate { command: vec!["/nonexistent/x".into()], timeout: Duration::from_secs(1) },
        });
        // QODE needs 2 * 50 evaluations; a budget of 60 makes it fail.
        plan.budget_override = Some(60);
        plan.algorithms.push(AlgorithmSpec::optimizer(OptimizerConfig::new(OptimizerKind::Qode, 0)));
        let dir = tempfile::tempdir().unwrap();
        let r = run_bench(&plan, &Materials::embedded(), dir.path(), 3).unwrap();
        assert_eq!(r.failures().count(), 4);
        assert_eq!(r.aggregate[0].runs, 2);
        assert_eq!((r.aggregate[1].runs, r.aggregate[1].failed_runs), (0, 2));
        let failures = fs::read_to_string(dir.path().join("failures.csv")).unwrap();
        assert_eq!(failures.lines().count(), 5);
    }

    #[test]
    fn landscape_counts_and_errors() {
        let calls = AtomicUsize::new(0);
        let obj = FnObjective::new(Bounds::uniform(3, 0.0, 1.0), |x: &[f64]| {
            calls.fetch_add(1, Ordering::SeqCst);
            x[0] * x[0] + x[1] * x[1] + x[2]
        });
        let l = landscape_scan(&obj, (0, 1), 2, None, Parallelism::Parallel).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 4);
        assert_eq!(l.evaluations(), 4);
        assert_eq!(l.fixed, vec![0.5, 0.5, 0.5]);
        // Symmetric in (x0, x1): the matrix equals its transpose.
        let l = landscape_scan(&obj, (0, 1), 7, None, Parallelism::Sequential).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                assert_eq!(l.values[a][b], l.values[b][a]);
            }
        }
        assert!(matches!(landscape_scan(&obj, (0, 3), 5, None, Parallelism::Sequential), Err(BenchError::CoordOutOfRange { index: 3, dim: 3 })));
        assert!(matches!(landscape_scan(&obj, (1, 1), 5, None, Parallelism::Sequential), Err(BenchError::BadLandscape)));
        assert!(matches!(landscape_scan(&obj, (0, 1), 1, None, Parallelism::Sequential), Err(BenchError::BadLandscape)));
        let csv = l.to_csv("t");
        assert!(csv.contains("# budgeted=false\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 8);
    }

    #[test]
    fn ellipsometry_landscape_minimum_near_truth() {
        let inst = ProblemInstance::builtin(InstanceId::Ellipsometry);
        let p = Problem::from_instance(&inst, &Materials::embedded()).unwrap();
        let l = landscape_scan(&p, (0, 1), 50, None, Parallelism::Parallel).unwrap();
        let (a, b) = l.argmin();
        let nearest = |grid: &[f64], v: f64| {
            (0..grid.len()).min_by(|&p, &q| (grid[p] - v).abs().total_cmp(&(grid[q] - v).abs())).unwrap()
        };
        // 100 nm sits midway between two grid lines and the valley runs diagonally, so the
        // coarse-grid minimum may land one cell away from the nearest point.
        let (na, nb) = (nearest(&l.xs, 100.0), nearest(&l.ys, 2.25));
        assert!(a.abs_diff(na) <= 1 && b.abs_diff(nb) <= 1, "{:?} vs {:?}", (a, b), (na, nb));
        let seq = landscape_scan(&p, (0, 1), 50, None, Parallelism::Sequential).unwrap();
        assert_eq!(l, seq);

        // With the truth on a lattice node the minimum is exactly there.
        let truth = EllipsometryTruth { thickness: l.xs[24], permittivity: l.ys[30] };
        let p = Problem::from_instance(&inst.clone().with_truth(truth), &Materials::embedded()).unwrap();
        let l = landscape_scan(&p, (0, 1), 50, None, Parallelism::Parallel).unwrap();
        assert_eq!(l.argmin(), (24, 30));
        assert!(l.values[24][30] < 1e-9);
    }
}
