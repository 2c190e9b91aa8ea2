//! Scoring candidate programs over several seeded runs.

use std::fs;
use std::path::{Path, PathBuf};

use photonopt_core::materials::Materials;
use photonopt_core::metrics::{summarize_runs, AoccConfig, RunSummary};
use photonopt_core::problems::{Problem, ProblemInstance, RunTrajectory};
use photonopt_core::sandbox::{run_candidate, RunStatus, SandboxConfig, Task};

use crate::candidate::Scores;
use crate::DiscoveryError;

pub const RUNNER_SOURCE: &str = include_str!("../assets/runner.py");
pub const RUNNER_FILE: &str = "runner.py";

/// Per-run summaries of the runs that completed, plus the error that stopped the rest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub runs: Vec<RunSummary>,
    pub error: Option<String>,
}

impl EvaluationReport {
    pub fn failed(error: impl Into<String>) -> Self {
        Self { runs: Vec::new(), error: Some(error.into()) }
    }

    pub fn scores(&self) -> Option<Scores> {
        summarize_runs(&self.runs).ok().map(Scores::from)
    }
}

pub trait Evaluator: Sync {
    /// Runs the program once per seed. Never panics on bad programs; problems go in `error`.
    fn evaluate(&self, id: usize, name: &str, source: &str, seeds: &[u64]) -> EvaluationReport;
}

/// Runs generated Python classes in the sandbox through the bundled runner script.
pub struct SandboxEvaluator {
    instance: ProblemInstance,
    problem: Problem,
    aocc: AoccConfig,
    work_dir: PathBuf,
    /// Argument template; `{runner}`, `{candidate}` and `{class}` are substituted.
    command: Vec<String>,
    sandbox: SandboxConfig,
}

impl SandboxEvaluator {
    pub fn default_command() -> Vec<String> {
        ["python3", "{runner}", "{candidate}", "{class}"].map(String::from).to_vec()
    }

    /// Writes the runner script into `work_dir`, where candidate sources will also go.
    pub fn new(instance: ProblemInstance, materials: &Materials, work_dir: &Path) -> Result<Self, DiscoveryError> {
        let problem = Problem::from_instance(&instance, materials)?;
        fs::create_dir_all(work_dir)?;
        fs::write(work_dir.join(RUNNER_FILE), RUNNER_SOURCE)?;
        Ok(Self {
            aocc: AoccConfig::linear(instance.aocc_lb, instance.aocc_ub),
            instance,
            problem,
            work_dir: work_dir.to_path_buf(),
            command: Self::default_command(),
            sandbox: SandboxConfig::default(),
        })
    }

    pub fn with_command(mut self, command: Vec<String>) -> Self {
        self.command = command;
        self
    }

    pub fn with_sandbox(mut self, sandbox: SandboxConfig) -> Self {
        self.sandbox = sandbox;
        self
    }

    pub fn with_aocc(mut self, aocc: AoccConfig) -> Self {
        self.aocc = aocc;
        self
    }

    pub fn candidate_path(&self, id: usize, name: &str) -> PathBuf {
        self.work_dir.join(format!("candidate_{id:03}_{}.py", file_stem(name)))
    }

    fn command_for(&self, path: &Path, class: &str) -> Vec<String> {
        let runner = self.work_dir.join(RUNNER_FILE);
        self.command
            .iter()
            .map(|a| {
                a.replace("{runner}", &runner.to_string_lossy())
                    .replace("{candidate}", &path.to_string_lossy())
                    .replace("{class}", class)
            })
            .collect()
    }
}

impl Evaluator for SandboxEvaluator {
    fn evaluate(&self, id: usize, name: &str, source: &str, seeds: &[u64]) -> EvaluationReport {
        let path = self.candidate_path(id, name);
        if let Err(e) = fs::write(&path, source) {
            return EvaluationReport::failed(format!("could not write {}: {e}", path.display()));
        }
        let command = self.command_for(&path, name);
        let mut report = EvaluationReport::default();
        for &seed in seeds {
            let task = Task { objective: &self.problem, instance_id: self.instance.id.as_str(), budget: self.instance.budget, seed };
            let result = match run_candidate(&command, &task, &self.sandbox) {
                Ok(r) => r,
                Err(e) => {
                    report.error = Some(e.to_string());
                    break;
                }
            };
            if result.status != RunStatus::Ok {
                let mut msg = result.status.as_str().to_string();
                if let Some(d) = &result.detail {
                    msg.push_str(": ");
                    msg.push_str(d);
                }
                if !result.stderr_capture.trim().is_empty() {
                    msg.push('\n');
                    msg.push_str(result.stderr_capture.trim_end());
                }
                report.error = Some(msg);
                break;
            }
            match RunSummary::from_trajectory(&result.trajectory, &self.aocc, self.instance.budget) {
                Ok(s) => report.runs.push(s),
                Err(e) => {
                    report.error = Some(format!("run with seed {seed} produced no usable trajectory: {e}"));
                    break;
                }
            }
        }
        report
    }
}

/// Deterministic stand-in for real program execution. Reads directives from the source:
/// `# mock-fitness: y` (or `y1, y2, ...`, cycled over runs) gives a constant trajectory of
/// that fitness, and `# mock-status: crashed` fails the candidate.
#[derive(Debug, Clone)]
pub struct ScriptedEvaluator {
    pub budget: usize,
    pub aocc: AoccConfig,
}

impl Default for ScriptedEvaluator {
    fn default() -> Self {
        Self { budget: 10, aocc: AoccConfig::linear(0.0, 1.0) }
    }
}

fn directive<'a>(source: &'a str, key: &str) -> Option<&'a str> {
    source.lines().find_map(|l| l.trim().strip_prefix('#').map(str::trim).and_then(|l| l.strip_prefix(key)).map(str::trim))
}

impl Evaluator for ScriptedEvaluator {
    fn evaluate(&self, _id: usize, name: &str, source: &str, seeds: &[u64]) -> EvaluationReport {
        if let Some(status) = directive(source, "mock-status:") {
            if status != "ok" {
                return EvaluationReport::failed(format!("{status}\nTraceback (most recent call last):\n  mock failure in {name}"));
            }
        }
        let Some(spec) = directive(source, "mock-fitness:") else {
            return EvaluationReport::failed("no mock-fitness directive");
        };
        let values: Result<Vec<f64>, _> = spec.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let values = match values {
            Ok(v) if !v.is_empty() => v,
            _ => return EvaluationReport::failed(format!("bad mock-fitness `{spec}`")),
        };
        let runs = (0..seeds.len())
            .map(|r| {
                let t = RunTrajectory::from_raw(name, std::iter::repeat_n(values[r % values.len()], self.budget));
                RunSummary::from_trajectory(&t, &self.aocc, self.budget).expect("non-empty trajectory")
            })
            .collect();
        EvaluationReport { runs, error: None }
    }
}

/// Filesystem-safe version of a candidate name.
pub fn file_stem(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).take(60).collect();
    if s.is_empty() {
        "candidate".into()
    } else {
        s
    }
}
