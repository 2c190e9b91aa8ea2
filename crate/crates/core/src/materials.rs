//! Tabulated optical constants and the solar spectrum.
//!
//! Tables are plain CSV with a mandatory header line; `#` lines are comments. Values between
//! samples are linearly interpolated, and queries outside the tabulated range are errors.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fmt::format_g;
use crate::tmm::{ComplexIndex, OpticsError};

pub const DISPERSION_HEADER: &str = "wavelength_nm,n,k";
pub const SPECTRUM_HEADER: &str = "wavelength_nm,irradiance_W_m2_nm";

/// Planck constant times speed of light, J·m.
pub const PLANCK_TIMES_C: f64 = 1.98644586e-25;

const GOLD_CSV: &str = include_str!("../data/au_nk.csv");
const SILICON_CSV: &str = include_str!("../data/si_nk.csv");
const AM15_CSV: &str = include_str!("../data/am15.csv");

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin} line {line}: {message}")]
    Parse { origin: String, line: usize, message: String },
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
    #[error("wavelength {wavelength} nm outside tabulated range [{min}, {max}] nm of {origin}")]
    OutOfRange { origin: String, wavelength: f64, min: f64, max: f64 },
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub wavelength: f64,
    pub n: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    material_id: String,
    samples: Vec<DispersionSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub wavelength: f64,
    pub irradiance: f64,
}

/// Spectral irradiance in W·m⁻²·nm⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct SolarSpectrum {
    samples: Vec<SpectrumSample>,
}

/// Splits a table into data rows, checking the header. Returns `(line_number, fields)`.
fn rows<'a>(origin: &str, text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, DataError> {
    let mut seen_header = false;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            let normalized: String = line.chars().filter(|c| !c.is_whitespace()).collect();
            if normalized != header {
                return Err(DataError::Parse {
                    origin: origin.to_string(),
                    line: i + 1,
                    message: format!("expected header `{header}`, found `{line}`"),
                });
            }
            seen_header = true;
            continue;
        }
        out.push((i + 1, line.split(',').map(str::trim).collect()));
    }
    if !seen_header {
        return Err(DataError::Invalid { origin: origin.to_string(), message: "missing header line".into() });
    }
    Ok(out)
}

fn parse_number(origin: &str, line: usize, field: &str, what: &str) -> Result<f64, DataError> {
    let v: f64 = field.parse().map_err(|_| DataError::Parse {
        origin: origin.to_string(),
        line,
        message: format!("invalid {what} `{field}`"),
    })?;
    if !v.is_finite() {
        return Err(DataError::Parse { origin: origin.to_string(), line, message: format!("non-finite {what}") });
    }
    Ok(v)
}

fn check_increasing(origin: &str, lines: &[usize], wavelengths: &[f64]) -> Result<(), DataError> {
    if wavelengths.len() < 2 {
        return Err(DataError::Invalid { origin: origin.into(), message: "at least two samples required".into() });
    }
    for w in 1..wavelengths.len() {
        if wavelengths[w] <= wavelengths[w - 1] {
            let message = if wavelengths[w] == wavelengths[w - 1] {
                format!("duplicate wavelength {}", wavelengths[w])
            } else {
                format!("wavelengths not increasing ({} after {})", wavelengths[w], wavelengths[w - 1])
            };
            return Err(DataError::Parse { origin: origin.into(), line: lines[w], message });
        }
    }
    Ok(())
}

/// Locates `x` in the sorted abscissae, returning the bracketing index and weight.
fn bracket(xs: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if !(first..=last).contains(&x) {
        return None;
    }
    let hi = xs.partition_point(|&v| v < x);
    if hi == 0 {
        return Some((0, 0.0));
    }
    if xs[hi] == x {
        return Some((hi, 0.0));
    }
    let lo = hi - 1;
    Some((lo, (x - xs[lo]) / (xs[hi] - xs[lo])))
}

impl DispersionTable {
    pub fn new(material_id: impl Into<String>, samples: Vec<DispersionSample>) -> Result<Self, DataError> {
        let material_id = material_id.into();
        let lines: Vec<usize> = (1..=samples.len()).collect();
        let wl: Vec<f64> = samples.iter().map(|s| s.wavelength).collect();
        check_increasing(&material_id, &lines, &wl)?;
        for s in &samples {
            ComplexIndex::new(s.n, s.k)?;
        }
        Ok(Self { material_id, samples })
    }

    pub fn parse(material_id: &str, text: &str) -> Result<Self, DataError> {
        let rows = rows(material_id, text, DISPERSION_HEADER)?;
        let mut samples = Vec::with_capacity(rows.len());
        let mut lines = Vec::with_capacity(rows.len());
        for (line, fields) in rows {
            if fields.len() != 3 {
                return Err(DataError::Parse {
                    origin: material_id.into(),
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let wavelength = parse_number(material_id, line, fields[0], "wavelength")?;
            let n = parse_number(material_id, line, fields[1], "n")?;
            let k = parse_number(material_id, line, fields[2], "k")?;
            if k < 0.0 {
                return Err(DataError::Parse { origin: material_id.into(), line, message: format!("negative k {k}") });
            }
            if n <= 0.0 {
                return Err(DataError::Parse { origin: material_id.into(), line, message: format!("non-positive n {n}") });
            }
            samples.push(DispersionSample { wavelength, n, k });
            lines.push(line);
        }
        let wl: Vec<f64> = samples.iter().map(|s| s.wavelength).collect();
        check_increasing(material_id, &lines, &wl)?;
        Ok(Self { material_id: material_id.to_string(), samples })
    }

    pub fn material_id(&self) -> &str {
        &self.material_id
    }

    pub fn samples(&self) -> &[DispersionSample] {
        &self.samples
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].wavelength, self.samples[self.samples.len() - 1].wavelength)
    }

    pub fn index_at(&self, wavelength: f64) -> Result<ComplexIndex, DataError> {
        let xs: Vec<f64> = self.samples.iter().map(|s| s.wavelength).collect();
        let (i, w) = bracket(&xs, wavelength).ok_or_else(|| {
            let (min, max) = self.range();
            DataError::OutOfRange { origin: self.material_id.clone(), wavelength, min, max }
        })?;
        let a = self.samples[i];
        if w == 0.0 {
            return Ok(ComplexIndex::new(a.n, a.k)?);
        }
        let b = self.samples[i + 1];
        Ok(ComplexIndex::new(a.n + w * (b.n - a.n), a.k + w * (b.k - a.k))?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# material={}\n{DISPERSION_HEADER}\n", self.material_id);
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", format_g(s.wavelength, 17), format_g(s.n, 17), format_g(s.k, 17)));
        }
        out
    }
}

/// Loads a dispersion table; the material id is the file stem.
pub fn load_dispersion(path: &Path) -> Result<DispersionTable, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("material");
    DispersionTable::parse(id, &text).map_err(|e| match e {
        DataError::Parse { line, message, .. } => DataError::Parse { origin: path.display().to_string(), line, message },
        DataError::Invalid { message, .. } => DataError::Invalid { origin: path.display().to_string(), message },
        other => other,
    })
}

impl SolarSpectrum {
    pub fn new(samples: Vec<SpectrumSample>) -> Result<Self, DataError> {
        let lines: Vec<usize> = (1..=samples.len()).collect();
        let wl: Vec<f64> = samples.iter().map(|s| s.wavelength).collect();
        check_increasing("spectrum", &lines, &wl)?;
        if let Some(s) = samples.iter().find(|s| !(s.irradiance >= 0.0)) {
            return Err(DataError::Invalid {
                origin: "spectrum".into(),
                message: format!("negative irradiance at {} nm", s.wavelength),
            });
        }
        Ok(Self { samples })
    }

    pub fn parse(origin: &str, text: &str) -> Result<Self, DataError> {
        let rows = rows(origin, text, SPECTRUM_HEADER)?;
        let mut samples = Vec::with_capacity(rows.len());
        let mut lines = Vec::with_capacity(rows.len());
        for (line, fields) in rows {
            if fields.len() != 2 {
                return Err(DataError::Parse {
                    origin: origin.into(),
                    line,
                    message: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let wavelength = parse_number(origin, line, fields[0], "wavelength")?;
            let irradiance = parse_number(origin, line, fields[1], "irradiance")?;
            if irradiance < 0.0 {
                return Err(DataError::Parse { origin: origin.into(), line, message: "negative irradiance".into() });
            }
            samples.push(SpectrumSample { wavelength, irradiance });
            lines.push(line);
        }
        let wl: Vec<f64> = samples.iter().map(|s| s.wavelength).collect();
        check_increasing(origin, &lines, &wl)?;
        Ok(Self { samples })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn samples(&self) -> &[SpectrumSample] {
        &self.samples
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].wavelength, self.samples[self.samples.len() - 1].wavelength)
    }

    pub fn irradiance_at(&self, wavelength: f64) -> Result<f64, DataError> {
        let xs: Vec<f64> = self.samples.iter().map(|s| s.wavelength).collect();
        let (i, w) = bracket(&xs, wavelength).ok_or_else(|| {
            let (min, max) = self.range();
            DataError::OutOfRange { origin: "solar spectrum".into(), wavelength, min, max }
        })?;
        let a = self.samples[i].irradiance;
        if w == 0.0 {
            return Ok(a);
        }
        Ok(a + w * (self.samples[i + 1].irradiance - a))
    }

    /// Photon flux density in photons·m⁻²·s⁻¹·nm⁻¹.
    pub fn photon_flux(&self, wavelength: f64) -> Result<f64, DataError> {
        Ok(photon_flux_from_irradiance(self.irradiance_at(wavelength)?, wavelength))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{SPECTRUM_HEADER}\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", format_g(s.wavelength, 17), format_g(s.irradiance, 17)));
        }
        out
    }
}

/// `E(λ) · λ / (h c)` with λ converted to metres.
pub fn photon_flux_from_irradiance(irradiance: f64, wavelength_nm: f64) -> f64 {
    irradiance * wavelength_nm * 1e-9 / PLANCK_TIMES_C
}

/// The optical data the objectives need: gold, silicon and the AM1.5G spectrum.
#[derive(Debug, Clone)]
pub struct Materials {
    pub gold: DispersionTable,
    pub silicon: DispersionTable,
    pub solar: SolarSpectrum,
}

impl Materials {
    pub const GOLD_FILE: &'static str = "au_nk.csv";
    pub const SILICON_FILE: &'static str = "si_nk.csv";
    pub const SOLAR_FILE: &'static str = "am15.csv";

    /// Copies of the shipped tables compiled into the binary.
    pub fn embedded() -> Self {
        Self {
            gold: DispersionTable::parse("au_nk", GOLD_CSV).expect("embedded gold table"),
            silicon: DispersionTable::parse("si_nk", SILICON_CSV).expect("embedded silicon table"),
            solar: SolarSpectrum::parse("am15", AM15_CSV).expect("embedded solar spectrum"),
        }
    }

    pub fn load_dir(dir: &Path) -> Result<Self, DataError> {
        Ok(Self {
            gold: load_dispersion(&dir.join(Self::GOLD_FILE))?,
            silicon: load_dispersion(&dir.join(Self::SILICON_FILE))?,
            solar: SolarSpectrum::load(&dir.join(Self::SOLAR_FILE))?,
        })
    }

    /// Directory holding the data files in a source checkout.
    pub fn source_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_LINES: &str = "wavelength_nm,n,k\n500,1.0,0.0\n600,2.0,0.0\n";

    #[test]
    fn midpoint_and_endpoints() {
        let t = DispersionTable::parse("x", TWO_LINES).unwrap();
        let mid = t.index_at(550.0).unwrap();
        assert_eq!((mid.n(), mid.k()), (1.5, 0.0));
        assert_eq!(t.index_at(500.0).unwrap().n(), 1.0);
        assert_eq!(t.index_at(600.0).unwrap().n(), 2.0);
        assert!(matches!(t.index_at(499.0), Err(DataError::OutOfRange { .. })));
    }

    #[test]
    fn comments_and_crlf_accepted() {
        let text = "# source: test\r\nwavelength_nm,n,k\r\n# mid comment\r\n500,1.0,0.1\r\n600,2.0,0.2\r\n";
        let t = DispersionTable::parse("x", text).unwrap();
        assert_eq!(t.samples().len(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = DispersionTable::parse("x", "wavelength_nm,n,k\n500,1.0,0.0\n600,abc,0.0\n").unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
        let err = DispersionTable::parse("x", "wavelength_nm,n,k\n500,1.0,0.0\n500,2.0,0.0\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = DispersionTable::parse("x", "wavelength_nm,n,k\n600,1.0,0.0\n500,2.0,0.0\n").unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }));
        let err = DispersionTable::parse("x", "wavelength_nm,n,k\n500,1.0,-0.1\n600,2.0,0.0\n").unwrap_err();
        assert!(err.to_string().contains("negative k"));
        assert!(DispersionTable::parse("x", "500,1.0,0.0\n600,2.0,0.0\n").is_err());
        assert!(DispersionTable::parse("x", "wavelength_nm,n,k\n500,1.0,0.0\n").is_err());
    }

    #[test]
    fn shipped_gold_matches_its_600nm_row() {
        let text = fs::read_to_string(Materials::source_dir().join(Materials::GOLD_FILE)).unwrap();
        let row = text.lines().find(|l| l.starts_with("600.0,")).expect("600 nm row");
        let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
        let au = Materials::embedded().gold;
        let idx = au.index_at(600.0).unwrap();
        assert_eq!((idx.n(), idx.k()), (fields[1], fields[2]));
    }

    #[test]
    fn shipped_tables_cover_objective_bands() {
        let m = Materials::embedded();
        assert!(m.silicon.index_at(375.0).is_ok());
        assert!(m.silicon.index_at(750.0).is_ok());
        assert!(m.gold.index_at(400.0).is_ok() && m.gold.index_at(800.0).is_ok());
        assert!(m.solar.photon_flux(375.0).is_ok() && m.solar.photon_flux(750.0).is_ok());
        let from_disk = Materials::load_dir(&Materials::source_dir()).unwrap();
        assert_eq!(from_disk.gold, m.gold);
    }

    #[test]
    fn photon_flux_values() {
        let s = SolarSpectrum::parse("s", "wavelength_nm,irradiance_W_m2_nm\n400,0\n600,2\n").unwrap();
        assert_eq!(s.photon_flux(400.0).unwrap(), 0.0);
        let expected = 5.00e-7 / 1.98644586e-25;
        assert!((photon_flux_from_irradiance(1.0, 500.0) / expected - 1.0).abs() < 1e-15);
        assert!((expected - 2.517e18).abs() / 2.517e18 < 1e-3);
        assert_eq!(photon_flux_from_irradiance(2.0, 500.0), 2.0 * photon_flux_from_irradiance(1.0, 500.0));
        assert!(s.photon_flux(650.0).is_err());
    }

    fn table() -> impl Strategy<Value = DispersionTable> {
        proptest::collection::vec((0.1f64..50.0, 0.05f64..6.0, 0.0f64..5.0), 2..20).prop_map(|rows| {
            let mut wl = 300.0;
            let samples = rows
                .into_iter()
                .map(|(step, n, k)| {
                    wl += step;
                    DispersionSample { wavelength: wl, n, k }
                })
                .collect();
            DispersionTable::new("prop", samples).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(t in table()) {
            let back = DispersionTable::parse("prop", &t.to_csv()).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn interpolation_exact_at_samples_and_bounded_between(t in table(), frac in 0.0f64..1.0) {
            let s = t.samples();
            for smp in s {
                let idx = t.index_at(smp.wavelength).unwrap();
                prop_assert_eq!((idx.n(), idx.k()), (smp.n, smp.k));
            }
            let i = ((s.len() - 1) as f64 * frac) as usize;
            let i = i.min(s.len() - 2);
            let w = s[i].wavelength + frac * (s[i + 1].wavelength - s[i].wavelength);
            let idx = t.index_at(w).unwrap();
            prop_assert!(idx.n() >= s[i].n.min(s[i + 1].n) - 1e-12 && idx.n() <= s[i].n.max(s[i + 1].n) + 1e-12);
            prop_assert!(idx.k() >= s[i].k.min(s[i + 1].k) - 1e-12 && idx.k() <= s[i].k.max(s[i + 1].k) + 1e-12);
        }
    }
}
