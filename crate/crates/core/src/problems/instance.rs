use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{Bounds, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstanceId {
    MiniBragg,
    Bragg,
    Ellipsometry,
    Photovoltaic,
    BigPhotovoltaic,
    HugePhotovoltaic,
}

impl InstanceId {
    pub const ALL: [InstanceId; 6] = [
        InstanceId::MiniBragg,
        InstanceId::Bragg,
        InstanceId::Ellipsometry,
        InstanceId::Photovoltaic,
        InstanceId::BigPhotovoltaic,
        InstanceId::HugePhotovoltaic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceId::MiniBragg => "mini-bragg",
            InstanceId::Bragg => "bragg",
            InstanceId::Ellipsometry => "ellipsometry",
            InstanceId::Photovoltaic => "photovoltaic",
            InstanceId::BigPhotovoltaic => "big-photovoltaic",
            InstanceId::HugePhotovoltaic => "huge-photovoltaic",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            InstanceId::MiniBragg | InstanceId::Bragg => Family::Bragg,
            InstanceId::Ellipsometry => Family::Ellipsometry,
            _ => Family::Photovoltaic,
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        InstanceId::ALL
            .into_iter()
            .find(|id| id.as_str() == key || id.as_str().replace('-', "") == key)
            .ok_or_else(|| ProblemError::UnknownInstance(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Bragg,
    Ellipsometry,
    Photovoltaic,
}

/// Film parameters used to synthesize the "measured" ellipsometry spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsometryTruth {
    pub thickness: f64,
    pub permittivity: f64,
}

impl Default for EllipsometryTruth {
    fn default() -> Self {
        Self { thickness: 100.0, permittivity: 2.25 }
    }
}

/// A benchmark instance: objective family, box, budget and AOCC clip bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub id: InstanceId,
    pub bounds: Bounds,
    pub budget: usize,
    pub aocc_lb: f64,
    pub aocc_ub: f64,
    /// Permittivities of the two alternating materials (Bragg/photovoltaic families).
    pub permittivities: Option<[f64; 2]>,
    pub truth: Option<EllipsometryTruth>,
}

impl ProblemInstance {
    /// Built-in instance table.
    pub fn builtin(id: InstanceId) -> Self {
        let layered = |layers: usize, tmin: f64, tmax: f64, budget: usize, perms: [f64; 2]| ProblemInstance {
            id,
            bounds: Bounds::uniform(layers, tmin, tmax),
            budget,
            aocc_lb: 0.0,
            aocc_ub: 1.0,
            permittivities: Some(perms),
            truth: None,
        };
        match id {
            InstanceId::MiniBragg => layered(10, 0.0, 218.0, 10_000, [1.96, 3.24]),
            InstanceId::Bragg => layered(20, 0.0, 218.0, 20_000, [1.96, 3.24]),
            InstanceId::Photovoltaic => layered(10, 30.0, 250.0, 5_000, [2.0, 3.0]),
            InstanceId::BigPhotovoltaic => layered(20, 30.0, 250.0, 10_000, [2.0, 3.0]),
            InstanceId::HugePhotovoltaic => layered(32, 30.0, 250.0, 16_000, [2.0, 3.0]),
            InstanceId::Ellipsometry => ProblemInstance {
                id,
                bounds: Bounds::new(vec![50.0, 1.1], vec![150.0, 3.0]).expect("static bounds"),
                budget: 1_000,
                aocc_lb: 0.0,
                aocc_ub: 40.0,
                permittivities: None,
                truth: Some(EllipsometryTruth::default()),
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_truth(mut self, truth: EllipsometryTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn from_cfg_str(text: &str) -> Result<Self, ProblemError> {
        let raw: RawInstance = toml::from_str(text).map_err(|e| ProblemError::Config(e.to_string()))?;
        raw.into_instance()
    }

    pub fn load_cfg(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProblemError::Config(format!("{}: {e}", path.display())))?;
        Self::from_cfg_str(&text).map_err(|e| ProblemError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_cfg_string(&self) -> String {
        let mut out = format!("id = \"{}\"\nlayers = {}\n", self.id, self.layers());
        out.push_str(&format!(
            "thickness_min = {:?}\nthickness_max = {:?}\n",
            self.bounds.lower()[0],
            self.bounds.upper()[0]
        ));
        if let Some([a, b]) = self.permittivities {
            out.push_str(&format!("permittivities = [{a:?}, {b:?}]\n"));
        } else {
            out.push_str(&format!(
                "permittivity_min = {:?}\npermittivity_max = {:?}\n",
                self.bounds.lower()[1],
                self.bounds.upper()[1]
            ));
        }
        out.push_str(&format!("budget = {}\naocc_lb = {:?}\naocc_ub = {:?}\n", self.budget, self.aocc_lb, self.aocc_ub));
        if let Some(t) = self.truth {
            out.push_str(&format!(
                "reference_thickness = {:?}\nreference_permittivity = {:?}\n",
                t.thickness, t.permittivity
            ));
        }
        out
    }

    fn layers(&self) -> usize {
        match self.id.family() {
            Family::Ellipsometry => 1,
            _ => self.dimension(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    id: String,
    layers: usize,
    thickness_min: f64,
    thickness_max: f64,
    permittivities: Option<[f64; 2]>,
    permittivity_min: Option<f64>,
    permittivity_max: Option<f64>,
    budget: usize,
    #[serde(default)]
    aocc_lb: f64,
    aocc_ub: f64,
    reference_thickness: Option<f64>,
    reference_permittivity: Option<f64>,
}

impl RawInstance {
    fn into_instance(self) -> Result<ProblemInstance, ProblemError> {
        let id: InstanceId = self.id.parse()?;
        let bad = |m: &str| ProblemError::Config(format!("{id}: {m}"));
        if self.budget == 0 {
            return Err(bad("budget must be positive"));
        }
        if !(self.aocc_lb < self.aocc_ub) {
            return Err(bad("aocc_lb must be below aocc_ub"));
        }
        let instance = match id.family() {
            Family::Ellipsometry => {
                if self.layers != 1 {
                    return Err(bad("ellipsometry has exactly one layer"));
                }
                let (pmin, pmax) = self
                    .permittivity_min
                    .zip(self.permittivity_max)
                    .ok_or_else(|| bad("permittivity_min/permittivity_max required"))?;
                let truth = match (self.reference_thickness, self.reference_permittivity) {
                    (Some(thickness), Some(permittivity)) => EllipsometryTruth { thickness, permittivity },
                    (None, None) => EllipsometryTruth::default(),
                    _ => return Err(bad("reference_thickness and reference_permittivity go together")),
                };
                ProblemInstance {
                    id,
                    bounds: Bounds::new(vec![self.thickness_min, pmin], vec![self.thickness_max, pmax])?,
                    budget: self.budget,
                    aocc_lb: self.aocc_lb,
                    aocc_ub: self.aocc_ub,
                    permittivities: None,
                    truth: Some(truth),
                }
            }
            Family::Bragg | Family::Photovoltaic => {
                let perms = self.permittivities.ok_or_else(|| bad("permittivities required"))?;
                if self.layers == 0 {
                    return Err(bad("layers must be positive"));
                }
                ProblemInstance {
                    id,
                    bounds: Bounds::new(
                        vec![self.thickness_min; self.layers],
                        vec![self.thickness_max; self.layers],
                    )?,
                    budget: self.budget,
                    aocc_lb: self.aocc_lb,
                    aocc_ub: self.aocc_ub,
                    permittivities: Some(perms),
                    truth: None,
                }
            }
        };
        Ok(instance)
    }
}
