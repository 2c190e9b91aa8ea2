//! `photonopt`: validate physics, run benchmarks and discovery, scan landscapes, plot results.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod data;
mod plot;
mod svg;
mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use photonopt_core::bench::{landscape_scan, run_bench, AlgorithmSource, AlgorithmSpec, BenchPlan};
use photonopt_core::fmt::format_g;
use photonopt_core::optimizers::{OptimizerConfig, OptimizerKind};
use photonopt_core::parallel::Parallelism;
use photonopt_core::problems::{InstanceId, Problem, ProblemInstance};
use photonopt_core::sandbox::SandboxConfig;
use photonopt_discovery::archive::write_archive;
use photonopt_discovery::mutation::QuotaRule;
use photonopt_discovery::{
    run_discovery, ChatClient, ChatConfig, EsConfig, Evaluator, LlmClient, MockLlm, PromptBundle, PromptSetting, SandboxEvaluator,
    ScriptedEvaluator,
};

use config::{pick, FileConfig, Resolved};

#[derive(Parser)]
#[command(name = "photonopt", version, about = "Multilayer photonic optimization workbench")]
struct Cli {
    /// Directory with au_nk.csv, si_nk.csv and am15.csv.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// TOML file with defaults for any flag (same key names).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in physics and metric self-checks.
    Validate,
    /// Run seeded optimizer or candidate runs and aggregate AOCC.
    Bench(BenchArgs),
    /// Run the LLM-driven evolution strategy over optimizer programs.
    Discover(Box<DiscoverArgs>),
    /// Evaluate a 2-D slice of an instance on a grid.
    Landscape(LandscapeArgs),
    /// Render convergence and final-fitness SVGs from a bench results directory.
    Plot(PlotArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Bench plan file; flags override its values.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Instance id or .cfg file (repeatable).
    #[arg(long)]
    instance: Vec<String>,
    /// Optimizer kind: de, qode, qnde, bfgs-restart, cma-es (repeatable).
    #[arg(long)]
    algo: Vec<String>,
    /// External candidate as NAME=COMMAND, the command split on whitespace (repeatable).
    #[arg(long)]
    candidate: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget_override: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use log10-scaled AOCC.
    #[arg(long)]
    log_scale: bool,
    /// Per-run timeout in seconds for external candidates.
    #[arg(long)]
    timeout: Option<u64>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    /// Keep the best of parents and offspring (default).
    #[arg(long, conflicts_with = "comma")]
    plus: bool,
    /// Keep the best of the offspring only.
    #[arg(long)]
    comma: bool,
    /// Candidates to generate in total, initial ones included.
    #[arg(long)]
    total: Option<usize>,
    #[arg(long)]
    runs_per_candidate: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget_override: Option<usize>,
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
    #[arg(long)]
    llm_temperature: Option<f64>,
    /// Environment variable holding the API key.
    #[arg(long)]
    llm_key_env: Option<String>,
    /// Replay replies from a script file instead of calling an endpoint.
    #[arg(long)]
    mock_script: Option<PathBuf>,
    /// bare, description or full.
    #[arg(long)]
    prompt_setting: Option<String>,
    /// Directory with replacement prompt templates.
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
    /// Start every initial slot from this program.
    #[arg(long)]
    seed_candidate: Option<PathBuf>,
    /// printed or at-least-one.
    #[arg(long)]
    quota_rule: Option<String>,
    /// sandbox (run Python programs) or scripted (read mock directives).
    #[arg(long)]
    evaluator: Option<String>,
    /// Candidate command template with {runner}, {candidate} and {class}.
    #[arg(long)]
    eval_command: Option<String>,
    /// Per-run timeout in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    instance: Option<String>,
    /// Two coordinate indices, e.g. 0,1.
    #[arg(long)]
    coords: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// Values for every coordinate, comma separated; defaults to the box midpoint.
    #[arg(long)]
    fixed: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path; an SVG heatmap is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Bench results directory.
    results: PathBuf,
    #[arg(long)]
    log_y: bool,
    /// Output directory, default <results>/plots.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure::Runtime(msg.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let file = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let data_dir = cli.data_dir.clone().or(file.data_dir.clone());
    let result = match cli.command {
        Command::Validate => cmd_validate(data_dir),
        Command::Bench(a) => cmd_bench(a, &file, data_dir),
        Command::Discover(a) => cmd_discover(*a, &file, data_dir),
        Command::Landscape(a) => cmd_landscape(a, &file, data_dir),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn materials(dir: Option<PathBuf>) -> Result<(photonopt_core::materials::Materials, data::DataSource), Failure> {
    let src = data::resolve(dir);
    let m = data::load(&src).map_err(|e| runtime(format!("optical data from {src}: {e}")))?;
    Ok((m, src))
}

fn parse_instance(s: &str) -> Result<ProblemInstance, Failure> {
    if s.ends_with(".cfg") || Path::new(s).is_file() {
        return ProblemInstance::load_cfg(Path::new(s)).map_err(|e| usage(e.to_string()));
    }
    s.parse::<InstanceId>().map(ProblemInstance::builtin).map_err(|e| usage(e.to_string()))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn cmd_validate(data_dir: Option<PathBuf>) -> CmdResult {
    let src = data::resolve(data_dir);
    let mut r = Resolved::default();
    r.set("data", &src);
    r.print("validate");
    let checks = validate::run_checks(data::load(&src).map_err(|e| e.to_string()), &src.to_string());
    for c in &checks {
        println!("{} {:<24} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    println!("{}/{} checks passed", checks.len() - failed.len(), checks.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!("failed checks: {}", failed.join(", "))))
    }
}

fn parse_candidate(spec: &str, timeout: Duration) -> Result<AlgorithmSpec, Failure> {
    let (name, cmd) = spec.split_once('=').ok_or_else(|| usage(format!("candidate `{spec}` is not NAME=COMMAND")))?;
    let command: Vec<String> = cmd.split_whitespace().map(String::from).collect();
    if name.trim().is_empty() || command.is_empty() {
        return Err(usage(format!("candidate `{spec}` needs a name and a command")));
    }
    Ok(AlgorithmSpec { name: name.trim().to_string(), source: AlgorithmSource::Candidate { command, timeout } })
}

fn cmd_bench(a: BenchArgs, file: &FileConfig, data_dir: Option<PathBuf>) -> CmdResult {
    let mut plan = match &a.plan {
        Some(p) => BenchPlan::load(p).map_err(|e| usage(e.to_string()))?,
        None => BenchPlan::new("bench", Vec::new(), Vec::new()),
    };
    let seed = pick(a.seed, file.seed, plan.base_seed);
    let timeout = Duration::from_secs(pick(a.timeout, file.timeout, 120));

    let instances = if a.instance.is_empty() { file.instance.clone().map(|v| v.into_vec()).unwrap_or_default() } else { a.instance.clone() };
    if !instances.is_empty() {
        plan.instances = instances.iter().map(|s| parse_instance(s)).collect::<Result<_, _>>()?;
    }
    let algos = if a.algo.is_empty() { file.algo.clone().map(|v| v.into_vec()).unwrap_or_default() } else { a.algo.clone() };
    let candidates: Vec<String> = if a.candidate.is_empty() {
        file.candidate.clone().unwrap_or_default().into_iter().map(|(k, v)| format!("{k}={v}")).collect()
    } else {
        a.candidate.clone()
    };
    if !algos.is_empty() || !candidates.is_empty() {
        plan.algorithms.clear();
        for name in &algos {
            let kind: OptimizerKind = name.parse().map_err(|e: photonopt_core::optimizers::OptimizerError| usage(e.to_string()))?;
            plan.algorithms.push(AlgorithmSpec::optimizer(OptimizerConfig::new(kind, seed)));
        }
        for c in &candidates {
            plan.algorithms.push(parse_candidate(c, timeout)?);
        }
    }
    if plan.instances.is_empty() {
        plan.instances.push(ProblemInstance::builtin(InstanceId::MiniBragg));
    }
    if plan.algorithms.is_empty() {
        plan.algorithms.push(AlgorithmSpec::optimizer(OptimizerConfig::new(OptimizerKind::De, seed)));
    }
    plan.runs = pick(a.runs, file.runs, plan.runs);
    plan.base_seed = seed;
    plan.budget_override = a.budget_override.or(file.budget_override).or(plan.budget_override);
    plan.log_scale = a.log_scale || file.log_scale.unwrap_or(plan.log_scale);
    plan.validate().map_err(|e| usage(e.to_string()))?;
    let workers = pick(a.workers, file.workers, default_workers()).max(1);
    let out = a.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(&plan.name));
    let (m, src) = materials(data_dir)?;

    let mut r = Resolved::default();
    r.set("plan", &plan.name)
        .set("instances", plan.instances.iter().map(|i| i.id.as_str()).collect::<Vec<_>>().join(","))
        .set("algorithms", plan.algorithms.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(","))
        .set("runs", plan.runs)
        .set("seed", plan.base_seed)
        .set("budget-override", plan.budget_override.map_or("none".into(), |b| b.to_string()))
        .set("log-scale", plan.log_scale)
        .set("workers", workers)
        .set("out", out.display())
        .set("data", &src);
    r.print("bench");

    let result = run_bench(&plan, &m, &out, workers).map_err(runtime)?;
    println!("{:<20} {:<16} {:>5} {:>7} {:>12} {:>12} {:>14}", "instance", "algorithm", "runs", "failed", "aocc_mean", "aocc_std", "y_best_mean");
    for row in &result.aggregate {
        let (am, asd, ym) = row.stats.map_or(("-".into(), "-".into(), "-".into()), |s| (format_g(s.aocc_mean, 6), format_g(s.aocc_std, 6), format_g(s.y_best_mean, 6)));
        println!("{:<20} {:<16} {:>5} {:>7} {:>12} {:>12} {:>14}", row.instance.as_str(), row.algorithm, row.runs, row.failed_runs, am, asd, ym);
    }
    let failures = result.failures().count();
    println!("results written to {}", result.out_dir.display());
    if failures > 0 {
        println!("{failures} run(s) failed; see failures.csv");
    }
    Ok(())
}

fn cmd_discover(a: DiscoverArgs, file: &FileConfig, data_dir: Option<PathBuf>) -> CmdResult {
    let inst_name = a.instance.clone().or_else(|| file.instance.clone().and_then(|v| v.into_vec().into_iter().next())).unwrap_or_else(|| "mini-bragg".into());
    let mut instance = parse_instance(&inst_name)?;
    if let Some(b) = a.budget_override.or(file.budget_override) {
        instance = instance.with_budget(b);
    }
    let plus = if a.comma {
        false
    } else if a.plus {
        true
    } else {
        file.plus.unwrap_or(true)
    };
    let mut es = EsConfig::new(pick(a.mu, file.mu, 1), pick(a.lambda, file.lambda, 1), plus);
    es.total_candidates = pick(a.total, file.total, 100);
    es.runs_per_candidate = pick(a.runs_per_candidate, file.runs_per_candidate, 3);
    es.seed = pick(a.seed, file.seed, 0);
    let quota = pick(a.quota_rule.clone(), file.quota_rule.clone(), "printed".into());
    es.quota_rule = quota.parse::<QuotaRule>().map_err(usage)?;
    let workers = pick(a.workers, file.workers, default_workers());
    es.parallelism = if workers > 1 { Parallelism::Parallel } else { Parallelism::Sequential };
    let seed_path = a.seed_candidate.clone().or(file.seed_candidate.clone());
    if let Some(p) = &seed_path {
        es.seed_candidate = Some(fs::read_to_string(p).map_err(|e| usage(format!("seed candidate {}: {e}", p.display())))?);
    }
    es.validate().map_err(|e| usage(e.to_string()))?;

    let setting_name = pick(a.prompt_setting.clone(), file.prompt_setting.clone(), "full".into());
    let setting: PromptSetting = setting_name.parse().map_err(usage)?;
    let mut prompts = PromptBundle::builtin(instance.id.family(), setting);
    let prompt_dir = a.prompt_dir.clone().or(file.prompt_dir.clone());
    if let Some(d) = &prompt_dir {
        prompts = prompts.override_from_dir(d).map_err(|e| usage(format!("prompt dir {}: {e}", d.display())))?;
    }

    let mock = a.mock_script.clone().or(file.mock_script.clone());
    let defaults = ChatConfig::default();
    let chat = ChatConfig {
        endpoint: pick(a.llm_endpoint.clone(), file.llm_endpoint.clone(), defaults.endpoint),
        model: pick(a.llm_model.clone(), file.llm_model.clone(), defaults.model),
        temperature: pick(a.llm_temperature, file.llm_temperature, defaults.temperature),
        api_key_env: pick(a.llm_key_env.clone(), file.llm_key_env.clone(), defaults.api_key_env),
        timeout: defaults.timeout,
    };
    let evaluator_kind = pick(a.evaluator.clone(), file.evaluator.clone(), "sandbox".into());
    let timeout = pick(a.timeout, file.timeout, 120);
    let out = a.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(format!("discover-{}", instance.id)));

    let mut r = Resolved::default();
    r.set("instance", instance.id)
        .set("budget", instance.budget)
        .set("strategy", es.label())
        .set("total", es.total_candidates)
        .set("runs-per-candidate", es.runs_per_candidate)
        .set("seed", es.seed)
        .set("prompt-setting", &setting_name)
        .set("quota-rule", &quota)
        .set("evaluator", &evaluator_kind)
        .set("workers", workers)
        .set("out", out.display());
    match &mock {
        Some(p) => r.set("llm", format!("mock script {}", p.display())),
        None => r.set("llm", format!("{} model {} (key from ${})", chat.endpoint, chat.model, chat.api_key_env)),
    };
    r.print("discover");

    let mut llm: Box<dyn LlmClient> = match &mock {
        Some(p) => Box::new(MockLlm::load(p).map_err(|e| usage(format!("mock script {}: {e}", p.display())))?),
        None => Box::new(ChatClient::new(chat).map_err(runtime)?),
    };
    let evaluator: Box<dyn Evaluator> = match evaluator_kind.as_str() {
        "scripted" => Box::new(ScriptedEvaluator::default()),
        "sandbox" => {
            let (m, _) = materials(data_dir)?;
            let mut ev = SandboxEvaluator::new(instance.clone(), &m, &out.join("work"))
                .map_err(runtime)?
                .with_sandbox(SandboxConfig { timeout: Duration::from_secs(timeout), ..SandboxConfig::default() });
            let cmd = a.eval_command.clone().or(file.eval_command.clone());
            if let Some(c) = cmd {
                ev = ev.with_command(c.split_whitespace().map(String::from).collect());
            }
            Box::new(ev)
        }
        other => return Err(usage(format!("unknown evaluator `{other}` (expected sandbox or scripted)"))),
    };

    let result = run_discovery(&es, &prompts, llm.as_mut(), evaluator.as_ref(), |c| match c.aocc() {
        Some(a) => println!("[{:03}] gen {:>3} {:<32} aocc {}", c.id, c.generation, c.name, format_g(a, 4)),
        None => println!("[{:03}] gen {:>3} {:<32} failed: {}", c.id, c.generation, c.name, c.error.as_deref().unwrap_or("").lines().next().unwrap_or("")),
    })
    .map_err(|e| usage(e.to_string()))?;
    write_archive(&result, &out, r.pairs()).map_err(runtime)?;
    match result.best() {
        Some(b) if b.is_evaluated() => println!("best: {} (aocc {})", b.name, format_g(b.aocc().unwrap_or(0.0), 4)),
        _ => println!("no candidate was evaluated successfully"),
    }
    println!("archive written to {} ({} candidates, {} failed)", out.display(), result.archive.len(), result.failed_count());
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',').map(|v| v.trim().parse::<T>().map_err(|_| usage(format!("bad {what} value `{v}`")))).collect()
}

fn cmd_landscape(a: LandscapeArgs, file: &FileConfig, data_dir: Option<PathBuf>) -> CmdResult {
    let inst_name = a.instance.clone().or_else(|| file.instance.clone().and_then(|v| v.into_vec().into_iter().next())).unwrap_or_else(|| "ellipsometry".into());
    let instance = parse_instance(&inst_name)?;
    let coords: Vec<usize> = parse_list(&pick(a.coords.clone(), file.coords.clone(), "0,1".into()), "coords")?;
    let [i, j] = coords[..] else {
        return Err(usage("--coords needs exactly two indices"));
    };
    let grid = pick(a.grid, file.grid, 50);
    let fixed: Option<Vec<f64>> = a.fixed.clone().or(file.fixed.clone()).map(|s| parse_list(&s, "fixed")).transpose()?;
    let workers = pick(a.workers, file.workers, default_workers());
    let out = a.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(format!("landscape-{}.csv", instance.id)));
    let (m, src) = materials(data_dir)?;

    let mut r = Resolved::default();
    r.set("instance", instance.id)
        .set("coords", format!("{i},{j}"))
        .set("grid", grid)
        .set("fixed", fixed.as_ref().map_or("box midpoint".into(), |f| f.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
        .set("workers", workers)
        .set("out", out.display())
        .set("data", &src);
    r.print("landscape");

    let problem = Problem::from_instance(&instance, &m).map_err(runtime)?;
    let mode = if workers > 1 { Parallelism::Parallel } else { Parallelism::Sequential };
    let scan = landscape_scan(&problem, (i, j), grid, fixed.as_deref(), mode).map_err(|e| usage(e.to_string()))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    fs::write(&out, scan.to_csv(instance.id.as_str())).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    // Heatmap rows follow coordinate j, columns coordinate i.
    let rows: Vec<Vec<f64>> = (0..scan.ys.len()).map(|b| scan.values.iter().map(|row| row[b]).collect()).collect();
    let svg = svg::heatmap(
        &format!("{} landscape", instance.id),
        &format!("x{i}"),
        &format!("x{j}"),
        (scan.xs[0], *scan.xs.last().expect("grid >= 2")),
        (scan.ys[0], *scan.ys.last().expect("grid >= 2")),
        &rows,
    );
    let svg_path = out.with_extension("svg");
    fs::write(&svg_path, svg).map_err(|e| runtime(format!("{}: {e}", svg_path.display())))?;
    let (ai, aj) = scan.argmin();
    println!(
        "{} evaluations; minimum {} at x{i}={}, x{j}={}",
        scan.evaluations(),
        format_g(scan.values[ai][aj], 6),
        format_g(scan.xs[ai], 6),
        format_g(scan.ys[aj], 6)
    );
    println!("wrote {} and {}", out.display(), svg_path.display());
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> CmdResult {
    let out = a.out.clone().unwrap_or_else(|| a.results.join("plots"));
    let mut r = Resolved::default();
    r.set("results", a.results.display()).set("log-y", a.log_y).set("out", out.display());
    r.print("plot");
    let written = plot::render(&a.results, &out, a.log_y).map_err(runtime)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
