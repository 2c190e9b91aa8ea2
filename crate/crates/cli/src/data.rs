use std::path::PathBuf;

use photonopt_core::materials::{DataError, Materials};

pub const DATA_DIR_ENV: &str = "PHOTONOPT_DATA_DIR";

/// Where the optical tables come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Dir(PathBuf),
    Embedded,
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::Dir(p) => write!(f, "{}", p.display()),
            DataSource::Embedded => f.write_str("embedded"),
        }
    }
}

/// `--data-dir`, then the environment variable, then the source checkout, then the copies
/// compiled into the binary.
pub fn resolve(flag: Option<PathBuf>) -> DataSource {
    if let Some(p) = flag {
        return DataSource::Dir(p);
    }
    if let Some(p) = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
        return DataSource::Dir(PathBuf::from(p));
    }
    let src = Materials::source_dir();
    if src.join(Materials::GOLD_FILE).exists() {
        return DataSource::Dir(src);
    }
    DataSource::Embedded
}

pub fn load(source: &DataSource) -> Result<Materials, DataError> {
    match source {
        DataSource::Dir(p) => Materials::load_dir(p),
        DataSource::Embedded => Ok(Materials::embedded()),
    }
}
