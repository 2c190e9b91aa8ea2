use num_complex::Complex64;

use super::{Bounds, EllipsometryTruth, Objective, ProblemError, ProblemInstance};
use crate::materials::Materials;
use crate::tmm::{angles_from_ratio, normalize_degrees, solve_raw, ComplexIndex, Polarization};

pub const BRAGG_WAVELENGTH: f64 = 600.0;
pub const ELLIPSOMETRY_ANGLE: f64 = 40.0;
pub const ELLIPSOMETRY_POINTS: usize = 100;
pub const PV_POINTS: usize = 300;
pub const SILICON_THICKNESS: f64 = 30_000.0;

fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { end } else { start + step * i as f64 }).collect()
}

fn alternating(perms: [f64; 2], layers: usize) -> Result<Vec<Complex64>, ProblemError> {
    let a = ComplexIndex::from_real_permittivity(perms[0])?.as_complex();
    let b = ComplexIndex::from_real_permittivity(perms[1])?.as_complex();
    Ok((0..layers).map(|i| if i % 2 == 0 { a } else { b }).collect())
}

/// Reflectivity of an alternating two-material mirror at 600 nm, normal incidence, s-polarized.
/// The fitness is `1 - R`. The first layer uses the first permittivity.
#[derive(Debug, Clone)]
pub struct BraggMirror {
    bounds: Bounds,
    indices: Vec<Complex64>,
    superstrate: Complex64,
    substrate: Complex64,
}

impl BraggMirror {
    pub fn new(bounds: Bounds, permittivities: [f64; 2]) -> Result<Self, ProblemError> {
        let indices = alternating(permittivities, bounds.dim())?;
        let air = Complex64::new(1.0, 0.0);
        Ok(Self { bounds, indices, superstrate: air, substrate: air })
    }

    pub fn for_instance(instance: &ProblemInstance) -> Result<Self, ProblemError> {
        let perms = instance.permittivities.ok_or_else(|| ProblemError::Config("missing permittivities".into()))?;
        Self::new(instance.bounds.clone(), perms)
    }

    /// Overrides the surrounding media (air on both sides by default).
    pub fn with_media(mut self, superstrate: ComplexIndex, substrate: ComplexIndex) -> Self {
        self.superstrate = superstrate.as_complex();
        self.substrate = substrate.as_complex();
        self
    }

    /// Quarter-wave thicknesses `600 / (4 n)` of each layer.
    pub fn quarter_wave_point(&self) -> Vec<f64> {
        self.indices.iter().map(|n| BRAGG_WAVELENGTH / (4.0 * n.re)).collect()
    }

    pub fn reflectance(&self, thicknesses: &[f64]) -> f64 {
        solve_raw(
            self.superstrate,
            thicknesses.iter().copied().zip(self.indices.iter().copied()),
            self.substrate,
            BRAGG_WAVELENGTH,
            0.0,
            Polarization::S,
        )
        .reflectance
    }
}

impl Objective for BraggMirror {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.bounds.check(x)?;
        Ok(1.0 - self.reflectance(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EllipsometryCost {
    /// Mean of `|Δψ| + |Δ_wrapped|` in degrees.
    #[default]
    Absolute,
    /// Mean of `Δψ² + Δ_wrapped²` in degrees².
    Quadratic,
}

/// Recovers thickness and permittivity of a transparent film on gold from its
/// `(psi, delta)` spectrum at 40° between 400 and 800 nm.
#[derive(Debug, Clone)]
pub struct EllipsometryFit {
    bounds: Bounds,
    wavelengths: Vec<f64>,
    substrate: Vec<Complex64>,
    reference: Vec<(f64, f64)>,
    truth: EllipsometryTruth,
    cost: EllipsometryCost,
}

impl EllipsometryFit {
    pub fn new(bounds: Bounds, materials: &Materials, truth: EllipsometryTruth) -> Result<Self, ProblemError> {
        if bounds.dim() != 2 {
            return Err(ProblemError::DimensionMismatch { expected: 2, got: bounds.dim() });
        }
        let wavelengths = linspace(400.0, 800.0, ELLIPSOMETRY_POINTS);
        let substrate = wavelengths
            .iter()
            .map(|&w| materials.gold.index_at(w).map(|i| i.as_complex()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut fit = Self {
            bounds,
            wavelengths,
            substrate,
            reference: Vec::new(),
            truth,
            cost: EllipsometryCost::default(),
        };
        fit.reference = fit.spectrum(truth.thickness, truth.permittivity)?;
        Ok(fit)
    }

    pub fn for_instance(instance: &ProblemInstance, materials: &Materials) -> Result<Self, ProblemError> {
        Self::new(instance.bounds.clone(), materials, instance.truth.unwrap_or_default())
    }

    pub fn with_cost(mut self, cost: EllipsometryCost) -> Self {
        self.cost = cost;
        self
    }

    pub fn truth(&self) -> EllipsometryTruth {
        self.truth
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn reference(&self) -> &[(f64, f64)] {
        &self.reference
    }

    /// `(psi, delta)` in degrees at every wavelength of the grid.
    pub fn spectrum(&self, thickness: f64, permittivity: f64) -> Result<Vec<(f64, f64)>, ProblemError> {
        let film = ComplexIndex::from_real_permittivity(permittivity)?.as_complex();
        let air = Complex64::new(1.0, 0.0);
        let sin = ELLIPSOMETRY_ANGLE.to_radians().sin();
        self.wavelengths
            .iter()
            .zip(&self.substrate)
            .map(|(&w, &sub)| {
                let layer = [(thickness, film)];
                let rs = solve_raw(air, layer.iter().copied(), sub, w, sin, Polarization::S).r;
                let rp = solve_raw(air, layer.iter().copied(), sub, w, sin, Polarization::P).r;
                Ok(angles_from_ratio(rp, rs)?)
            })
            .collect()
    }

    /// Cost of a spectrum against the reference, with `delta_shift` degrees added to every
    /// measured Δ before wrapping.
    pub fn cost_of(&self, spectrum: &[(f64, f64)], delta_shift: f64) -> f64 {
        let total: f64 = spectrum
            .iter()
            .zip(&self.reference)
            .map(|(&(psi, delta), &(psi_ref, delta_ref))| {
                let dpsi = psi - psi_ref;
                let ddelta = normalize_degrees(delta + delta_shift - delta_ref);
                match self.cost {
                    EllipsometryCost::Absolute => dpsi.abs() + ddelta.abs(),
                    EllipsometryCost::Quadratic => dpsi * dpsi + ddelta * ddelta,
                }
            })
            .sum();
        total / spectrum.len() as f64
    }
}

impl Objective for EllipsometryFit {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.bounds.check(x)?;
        let spectrum = self.spectrum(x[0], x[1])?;
        Ok(self.cost_of(&spectrum, 0.0))
    }
}

/// Antireflection coating on a 30 µm silicon absorber: fitness is `1 - j_sc / j_ideal`
/// over 375–750 nm under AM1.5G, at normal incidence.
#[derive(Debug, Clone)]
pub struct Photovoltaic {
    bounds: Bounds,
    indices: Vec<Complex64>,
    wavelengths: Vec<f64>,
    silicon: Vec<Complex64>,
    /// Trapezoid weight times photon flux at each wavelength.
    weighted_flux: Vec<f64>,
    ideal_current: f64,
}

impl Photovoltaic {
    pub fn new(bounds: Bounds, permittivities: [f64; 2], materials: &Materials) -> Result<Self, ProblemError> {
        let indices = alternating(permittivities, bounds.dim())?;
        let wavelengths = linspace(375.0, 750.0, PV_POINTS);
        let step = (750.0 - 375.0) / (PV_POINTS - 1) as f64;
        let silicon = wavelengths
            .iter()
            .map(|&w| materials.silicon.index_at(w).map(|i| i.as_complex()))
            .collect::<Result<Vec<_>, _>>()?;
        let weighted_flux = wavelengths
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let weight = if i == 0 || i == PV_POINTS - 1 { 0.5 * step } else { step };
                Ok(weight * materials.solar.photon_flux(w)?)
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        let ideal_current = weighted_flux.iter().sum();
        Ok(Self { bounds, indices, wavelengths, silicon, weighted_flux, ideal_current })
    }

    pub fn for_instance(instance: &ProblemInstance, materials: &Materials) -> Result<Self, ProblemError> {
        let perms = instance.permittivities.ok_or_else(|| ProblemError::Config("missing permittivities".into()))?;
        Self::new(instance.bounds.clone(), perms, materials)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    /// Absorbed fraction in silicon at every wavelength of the integration grid.
    pub fn absorption_spectrum(&self, thicknesses: &[f64]) -> Vec<f64> {
        let air = Complex64::new(1.0, 0.0);
        self.wavelengths
            .iter()
            .zip(&self.silicon)
            .map(|(&w, &si)| {
                let layers = thicknesses
                    .iter()
                    .copied()
                    .zip(self.indices.iter().copied())
                    .chain(std::iter::once((SILICON_THICKNESS, si)));
                solve_raw(air, layers, air, w, 0.0, Polarization::S).absorptance
            })
            .collect()
    }

    /// Fitness for a given absorption spectrum on the integration grid.
    pub fn fitness_from_absorption(&self, absorption: &[f64]) -> f64 {
        let current: f64 = absorption.iter().zip(&self.weighted_flux).map(|(a, w)| a * w).sum();
        1.0 - current / self.ideal_current
    }
}

impl Objective for Photovoltaic {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.bounds.check(x)?;
        Ok(self.fitness_from_absorption(&self.absorption_spectrum(x)))
    }
}
