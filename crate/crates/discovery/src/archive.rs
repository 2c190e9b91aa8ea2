//! On-disk layout of a discovery run.
//!
//! ```text
//! <dir>/config.txt
//! <dir>/manifest.csv         one row per candidate: scores, status and lineage
//! <dir>/generations.csv      parent ids after each selection
//! <dir>/candidates/NNN_Name.py
//! <dir>/prompts/NNN.txt      prompt and raw reply
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use photonopt_core::fmt::format_g;

use crate::candidate::CandidateAlgorithm;
use crate::es::DiscoveryResult;
use crate::evaluate::file_stem;
use crate::DiscoveryError;

pub const MANIFEST_HEADER: [&str; 14] = [
    "id",
    "generation",
    "name",
    "parent_id",
    "parent_name",
    "status",
    "mutation_rate",
    "line_count",
    "aocc_mean",
    "aocc_std",
    "y_best_mean",
    "y_best_std",
    "description",
    "error",
];

pub fn candidate_file(c: &CandidateAlgorithm) -> String {
    format!("{:03}_{}.py", c.id, file_stem(&c.name))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_archive(result: &DiscoveryResult, dir: &Path, header: &[(String, String)]) -> Result<PathBuf, DiscoveryError> {
    let cand_dir = dir.join("candidates");
    let prompt_dir = dir.join("prompts");
    fs::create_dir_all(&cand_dir)?;
    fs::create_dir_all(&prompt_dir)?;

    let cfg = &result.config;
    let mut config = String::new();
    for (k, v) in header {
        config.push_str(&format!("{k} = {v}\n"));
    }
    config.push_str(&format!(
        "strategy = {}\ntotal_candidates = {}\nruns_per_candidate = {}\nseed = {}\nmutation_beta = {}\nmutation_max_rate = {}\n",
        cfg.label(),
        cfg.total_candidates,
        cfg.runs_per_candidate,
        cfg.seed,
        cfg.mutation.beta,
        cfg.mutation.max_rate
    ));
    fs::write(dir.join("config.txt"), config)?;

    let mut w = csv::Writer::from_path(dir.join("manifest.csv"))?;
    w.write_record(MANIFEST_HEADER)?;
    for c in &result.archive {
        fs::write(cand_dir.join(candidate_file(c)), &c.source)?;
        let s = c.scores;
        w.write_record([
            c.id.to_string(),
            c.generation.to_string(),
            c.name.clone(),
            opt(c.parent_id),
            c.parent_name.clone().unwrap_or_default(),
            c.status().as_str().to_string(),
            opt(c.mutation_rate),
            c.line_count().to_string(),
            opt(s.map(|s| format_g(s.aocc_mean, 17))),
            opt(s.map(|s| format_g(s.aocc_std, 17))),
            opt(s.map(|s| format_g(s.y_best_mean, 17))),
            opt(s.map(|s| format_g(s.y_best_std, 17))),
            c.description.clone(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut g = csv::Writer::from_path(dir.join("generations.csv"))?;
    g.write_record(["generation", "offspring", "parents", "best_parent_aocc"])?;
    for rec in &result.generations {
        let best = rec.parents.first().and_then(|&i| result.archive[i].aocc());
        g.write_record([rec.generation.to_string(), join_ids(&rec.offspring), join_ids(&rec.parents), opt(best.map(|a| format_g(a, 17)))])?;
    }
    g.flush()?;

    for p in &result.prompts {
        let reply = match &p.response {
            Ok(r) => r.clone(),
            Err(e) => format!("[request failed after {} attempts] {e}", p.attempts),
        };
        fs::write(prompt_dir.join(format!("{:03}.txt", p.candidate_id)), format!("=== prompt ===\n{}\n=== response ===\n{reply}\n", p.prompt))?;
    }
    Ok(dir.to_path_buf())
}

/// One manifest row read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: usize,
    pub generation: usize,
    pub name: String,
    pub parent_id: Option<usize>,
    pub status: String,
    pub aocc_mean: Option<f64>,
    pub y_best_mean: Option<f64>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, DiscoveryError> {
    let mut r = csv::Reader::from_path(path)?;
    let parse_err = |what: &str, v: &str| DiscoveryError::Config(format!("manifest {what} `{v}` is not a number"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, what: &str| -> Result<Option<f64>, DiscoveryError> {
            let v = field(i);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| parse_err(what, v))
            }
        };
        let int = |i: usize, what: &str| -> Result<usize, DiscoveryError> { field(i).parse().map_err(|_| parse_err(what, field(i))) };
        rows.push(ManifestRow {
            id: int(0, "id")?,
            generation: int(1, "generation")?,
            name: field(2).to_string(),
            parent_id: if field(3).is_empty() { None } else { Some(int(3, "parent_id")?) },
            status: field(5).to_string(),
            aocc_mean: num(8, "aocc_mean")?,
            y_best_mean: num(10, "y_best_mean")?,
        });
    }
    Ok(rows)
}
