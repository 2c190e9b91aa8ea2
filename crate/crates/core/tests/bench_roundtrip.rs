use std::fs;
use std::path::Path;

use photonopt_core::bench::{run_bench, run_path, AlgorithmSpec, BenchPlan, AGGREGATE_HEADER};
use photonopt_core::materials::Materials;
use photonopt_core::metrics::read_run_csv;
use photonopt_core::optimizers::{OptimizerConfig, OptimizerKind};
use photonopt_core::problems::{InstanceId, ProblemInstance};

fn plan() -> BenchPlan {
    let mut plan = BenchPlan::new(
        "roundtrip",
        vec![ProblemInstance::builtin(InstanceId::MiniBragg), ProblemInstance::builtin(InstanceId::Ellipsometry)],
        vec![
            AlgorithmSpec::optimizer(OptimizerConfig::new(OptimizerKind::De, 0)),
            AlgorithmSpec::optimizer(OptimizerConfig::new(OptimizerKind::CmaEs, 0)),
        ],
    );
    plan.runs = 4;
    plan.base_seed = 100;
    plan.budget_override = Some(250);
    plan
}

/// Recomputes AOCC directly from the stored best-so-far column.
fn naive_aocc(best: &[f64], lb: f64, ub: f64, budget: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..budget {
        let s = best[i.min(best.len() - 1)];
        total += 1.0 - (s.clamp(lb, ub) - lb) / (ub - lb);
    }
    total / budget as f64
}

#[test]
fn aggregate_matches_per_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan();
    let result = run_bench(&plan, &Materials::embedded(), dir.path(), 4).unwrap();
    let text = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(AGGREGATE_HEADER));
    for (row, line) in result.aggregate.iter().zip(lines) {
        let inst = ProblemInstance::builtin(row.instance);
        let mut aoccs = Vec::new();
        let mut bests = Vec::new();
        for run in 0..plan.runs {
            let (meta, traj) = read_run_csv(&run_path(dir.path(), row.instance, &row.algorithm, run)).unwrap();
            assert_eq!(meta.seed, 100 + run as u64);
            assert_eq!(traj.len(), 250);
            let best: Vec<f64> = traj.best_so_far().collect();
            aoccs.push(naive_aocc(&best, inst.aocc_lb, inst.aocc_ub, 250));
            bests.push(*best.last().unwrap());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let std = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let fields: Vec<f64> = line.split(',').skip(4).map(|f| f.parse().unwrap()).collect();
        let expected = [mean(&aoccs), std(&aoccs), mean(&bests), std(&bests)];
        for (got, want) in fields.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{line}: {got} vs {want}");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_bench(&plan(), &Materials::embedded(), a.path(), 3).unwrap();
    run_bench(&plan(), &Materials::embedded(), b.path(), 1).unwrap();
    let files = |root: &Path| {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(p) = stack.pop() {
            for e in fs::read_dir(&p).unwrap() {
                let path = e.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
                }
            }
        }
        out.sort();
        out
    };
    let fa = files(a.path());
    assert_eq!(fa.len(), 2 * 2 * 4 + 2);
    assert_eq!(fa, files(b.path()));
}

#[test]
fn aggregate_is_invariant_to_run_order() {
    use photonopt_core::metrics::{summarize_runs, RunSummary};
    let dir = tempfile::tempdir().unwrap();
    let result = run_bench(&plan(), &Materials::embedded(), dir.path(), 2).unwrap();
    let mut summaries: Vec<RunSummary> = result
        .cells
        .iter()
        .filter(|c| c.instance == InstanceId::MiniBragg && c.algorithm == "de")
        .map(|c| c.outcome.as_ref().unwrap().summary)
        .collect();
    let forward = summarize_runs(&summaries).unwrap();
    summaries.reverse();
    summaries.rotate_left(1);
    let shuffled = summarize_runs(&summaries).unwrap();
    assert!((forward.aocc_mean - shuffled.aocc_mean).abs() < 1e-15);
    assert!((forward.y_best_std - shuffled.y_best_std).abs() < 1e-15);
}
