//! Convergence curves and final-fitness box plots from a bench results directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use photonopt_core::fmt::format_g;
use photonopt_core::metrics::read_run_csv;

use crate::svg::{box_plot, line_chart, BoxStats, Series};

const MAX_POINTS: usize = 400;

/// Run trajectories grouped by instance, then algorithm.
pub type RunTable = BTreeMap<String, BTreeMap<String, Vec<Vec<f64>>>>;

/// Reads `runs/<instance>/<algorithm>/run_*.csv` below `dir`.
pub fn collect_runs(dir: &Path) -> Result<RunTable, String> {
    let runs_dir = dir.join("runs");
    let read = |p: &Path| fs::read_dir(p).map_err(|e| format!("cannot read {}: {e}", p.display()));
    let mut table = RunTable::new();
    for inst in read(&runs_dir)? {
        let inst = inst.map_err(|e| e.to_string())?.path();
        if !inst.is_dir() {
            continue;
        }
        for algo in read(&inst)? {
            let algo = algo.map_err(|e| e.to_string())?.path();
            if !algo.is_dir() {
                continue;
            }
            let mut files: Vec<PathBuf> = read(&algo)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            for f in files {
                let (meta, traj) = read_run_csv(&f).map_err(|e| e.to_string())?;
                table.entry(meta.instance).or_default().entry(meta.algorithm).or_default().push(traj.best_so_far().collect());
            }
        }
    }
    if table.is_empty() {
        return Err(format!("no run files under {}", runs_dir.display()));
    }
    Ok(table)
}

/// Mean best-so-far per evaluation; shorter runs hold their last value.
pub fn mean_curve(runs: &[Vec<f64>]) -> Vec<f64> {
    let len = runs.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| runs.iter().map(|r| r[i.min(r.len() - 1)]).sum::<f64>() / runs.len() as f64)
        .collect()
}

fn thin(curve: &[f64]) -> Vec<(f64, f64)> {
    let step = curve.len().div_ceil(MAX_POINTS).max(1);
    let mut pts: Vec<(f64, f64)> = curve.iter().enumerate().step_by(step).map(|(i, v)| ((i + 1) as f64, *v)).collect();
    if let Some(last) = curve.last() {
        if pts.last().map(|p| p.0) != Some(curve.len() as f64) {
            pts.push((curve.len() as f64, *last));
        }
    }
    pts
}

/// Writes per-instance SVGs and the CSV behind them into `out`; returns the written paths.
pub fn render(dir: &Path, out: &Path, log_y: bool) -> Result<Vec<PathBuf>, String> {
    let table = collect_runs(dir)?;
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<(), String> {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
        written.push(p);
        Ok(())
    };
    for (inst, algos) in &table {
        let mut series = Vec::new();
        let mut boxes = Vec::new();
        let mut curve_csv = String::from("algorithm,evaluation,mean_best_so_far\n");
        let mut final_csv = String::from("algorithm,run,final_best\n");
        for (algo, runs) in algos {
            let curve = mean_curve(runs);
            for (i, v) in curve.iter().enumerate() {
                curve_csv.push_str(&format!("{algo},{},{}\n", i + 1, format_g(*v, 17)));
            }
            let finals: Vec<f64> = runs.iter().filter_map(|r| r.last().copied()).collect();
            for (k, v) in finals.iter().enumerate() {
                final_csv.push_str(&format!("{algo},{k},{}\n", format_g(*v, 17)));
            }
            series.push(Series { label: algo.clone(), points: thin(&curve) });
            boxes.extend(BoxStats::from_values(algo.clone(), &finals));
        }
        let ylabel = if log_y { "mean best-so-far fitness (log)" } else { "mean best-so-far fitness" };
        write(format!("convergence_{inst}.svg"), line_chart(&format!("{inst}: convergence"), "evaluations", ylabel, &series, log_y))?;
        write(format!("convergence_{inst}.csv"), curve_csv)?;
        write(format!("final_{inst}.svg"), box_plot(&format!("{inst}: final fitness"), "best fitness", &boxes))?;
        write(format!("final_{inst}.csv"), final_csv)?;
    }
    Ok(written)
}
