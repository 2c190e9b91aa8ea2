//! TOML config file merged under the command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Every key a config file may set. Keys a command does not use are ignored by it.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub instance: Option<OneOrMany>,
    pub algo: Option<OneOrMany>,
    pub candidate: Option<BTreeMap<String, String>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub budget_override: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub log_scale: Option<bool>,
    pub timeout: Option<u64>,
    pub mu: Option<usize>,
    pub lambda: Option<usize>,
    pub plus: Option<bool>,
    pub total: Option<usize>,
    pub runs_per_candidate: Option<usize>,
    pub llm_endpoint: Option<String>,
    pub llm_model: Option<String>,
    pub llm_temperature: Option<f64>,
    pub llm_key_env: Option<String>,
    pub mock_script: Option<PathBuf>,
    pub prompt_setting: Option<String>,
    pub prompt_dir: Option<PathBuf>,
    pub seed_candidate: Option<PathBuf>,
    pub quota_rule: Option<String>,
    pub evaluator: Option<String>,
    pub eval_command: Option<String>,
    pub coords: Option<String>,
    pub grid: Option<usize>,
    pub fixed: Option<String>,
    pub data_dir: Option<PathBuf>,
}

impl FileConfig {
    /// Relative paths inside the file are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.out, &mut cfg.mock_script, &mut cfg.prompt_dir, &mut cfg.seed_candidate, &mut cfg.data_dir] {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        }
        Ok(cfg)
    }
}

/// Flag value if given, else config value, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Collects `key = value` lines for the resolved-config printout.
#[derive(Default)]
pub struct Resolved(Vec<(String, String)>);

impl Resolved {
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn print(&self, command: &str) {
        println!("# resolved config ({command})");
        for (k, v) in &self.0 {
            println!("{k} = {v}");
        }
        println!();
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.0
    }
}
