//! Coherent transfer-matrix optics for planar multilayers.
//!
//! The stack is solved with the characteristic-matrix (Abelès) formulation using tilted
//! admittances. Refractive indices follow the `n + ik` convention with `k >= 0` for absorbing
//! media, and every medium is described by its complex longitudinal factor `n cos(theta)`, so
//! grazing and evanescent geometries never go through an explicit angle.
//!
//! Lengths are nanometres, angles are degrees at the API boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("extinction coefficient must be non-negative, got {0}")]
    NegativeExtinction(f64),
    #[error("refractive index must be finite with positive real part, got n={0}")]
    InvalidIndex(f64),
    #[error("wavelength must be positive and finite, got {0} nm")]
    InvalidWavelength(f64),
    #[error("incidence angle must lie in [0, 90) degrees, got {0}")]
    InvalidAngle(f64),
    #[error("layer {index} has invalid thickness {thickness} nm")]
    InvalidThickness { index: usize, thickness: f64 },
    #[error("s-polarized reflection vanishes; the ellipsometric ratio is undefined")]
    DegenerateGeometry,
}

/// Complex refractive index `n + ik` of a passive medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexIndex {
    n: f64,
    k: f64,
}

impl ComplexIndex {
    pub fn new(n: f64, k: f64) -> Result<Self, OpticsError> {
        if !n.is_finite() || n <= 0.0 {
            return Err(OpticsError::InvalidIndex(n));
        }
        if !k.is_finite() || k < 0.0 {
            return Err(OpticsError::NegativeExtinction(k));
        }
        Ok(Self { n, k })
    }

    /// Lossless medium. Panics if `n` is not a positive finite number.
    pub fn lossless(n: f64) -> Self {
        Self::new(n, 0.0).expect("lossless index must be positive and finite")
    }

    /// Index of a medium with real permittivity `eps > 0` (`n = sqrt(eps)`).
    pub fn from_real_permittivity(eps: f64) -> Result<Self, OpticsError> {
        Self::from_permittivity(Complex64::new(eps, 0.0))
    }

    /// Index from a complex permittivity, taking the root with non-negative extinction.
    pub fn from_permittivity(eps: Complex64) -> Result<Self, OpticsError> {
        let mut root = eps.sqrt();
        if root.im < 0.0 {
            root = -root;
        }
        Self::new(root.re, root.im.max(0.0))
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn permittivity(&self) -> Complex64 {
        let c = self.as_complex();
        c * c
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.n, self.k)
    }

    pub fn is_lossless(&self) -> bool {
        self.k == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    S,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    wavelength: f64,
    angle_deg: f64,
    polarization: Polarization,
}

impl PlaneWave {
    pub fn new(wavelength: f64, angle_deg: f64, polarization: Polarization) -> Result<Self, OpticsError> {
        if !wavelength.is_finite() || wavelength <= 0.0 {
            return Err(OpticsError::InvalidWavelength(wavelength));
        }
        if !angle_deg.is_finite() || !(0.0..90.0).contains(&angle_deg) {
            return Err(OpticsError::InvalidAngle(angle_deg));
        }
        Ok(Self { wavelength, angle_deg, polarization })
    }

    pub fn normal(wavelength: f64, polarization: Polarization) -> Result<Self, OpticsError> {
        Self::new(wavelength, 0.0, polarization)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn with_polarization(self, polarization: Polarization) -> Self {
        Self { polarization, ..self }
    }

    fn sin_theta(&self) -> f64 {
        if self.angle_deg == 0.0 {
            0.0
        } else {
            self.angle_deg.to_radians().sin()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub thickness: f64,
    pub index: ComplexIndex,
}

/// Layers in light-incidence order between a semi-infinite superstrate and substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    superstrate: ComplexIndex,
    layers: Vec<Layer>,
    substrate: ComplexIndex,
}

impl LayerStack {
    pub fn new(superstrate: ComplexIndex, substrate: ComplexIndex) -> Self {
        Self { superstrate, layers: Vec::new(), substrate }
    }

    pub fn with_layers(
        superstrate: ComplexIndex,
        layers: Vec<Layer>,
        substrate: ComplexIndex,
    ) -> Result<Self, OpticsError> {
        for (index, layer) in layers.iter().enumerate() {
            check_thickness(index, layer.thickness)?;
        }
        Ok(Self { superstrate, layers, substrate })
    }

    pub fn push(&mut self, thickness: f64, index: ComplexIndex) -> Result<&mut Self, OpticsError> {
        check_thickness(self.layers.len(), thickness)?;
        self.layers.push(Layer { thickness, index });
        Ok(self)
    }

    pub fn layer(mut self, thickness: f64, index: ComplexIndex) -> Result<Self, OpticsError> {
        self.push(thickness, index)?;
        Ok(self)
    }

    pub fn superstrate(&self) -> ComplexIndex {
        self.superstrate
    }

    pub fn substrate(&self) -> ComplexIndex {
        self.substrate
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// The same structure illuminated from the substrate side.
    pub fn reversed(&self) -> Self {
        let mut layers = self.layers.clone();
        layers.reverse();
        Self { superstrate: self.substrate, layers, substrate: self.superstrate }
    }
}

fn check_thickness(index: usize, thickness: f64) -> Result<(), OpticsError> {
    if thickness.is_finite() && thickness >= 0.0 {
        Ok(())
    } else {
        Err(OpticsError::InvalidThickness { index, thickness })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackResponse {
    /// Amplitude reflection coefficient.
    pub r: Complex64,
    /// Amplitude transmission coefficient (field amplitude, not tangential component).
    pub t: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub absorptance: f64,
}

/// Longitudinal factor `n cos(theta)` for a medium of index `n` given the conserved
/// transverse component `kx = n0 sin(theta0)`.
///
/// The principal square root is used; for passive media it is the branch with non-negative
/// imaginary part, i.e. waves decay away from the interface they enter through.
fn longitudinal(n: Complex64, kx: Complex64) -> Complex64 {
    let z = n * n - kx * kx;
    let q = z.sqrt();
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, q.im.abs())
    } else {
        q
    }
}

fn admittance(n: Complex64, q: Complex64, pol: Polarization) -> Complex64 {
    match pol {
        Polarization::S => q,
        Polarization::P => n * n / q,
    }
}

/// Single-interface Fresnel amplitude coefficients, light incident from `n1`.
///
/// The p-convention makes `r_p == r_s` at normal incidence.
pub fn fresnel_interface(
    n1: ComplexIndex,
    n2: ComplexIndex,
    wave: &PlaneWave,
) -> Result<(Complex64, Complex64), OpticsError> {
    PlaneWave::new(wave.wavelength, wave.angle_deg, wave.polarization)?;
    let (a, b) = (n1.as_complex(), n2.as_complex());
    Ok(fresnel_raw(a, b, a * wave.sin_theta(), wave.polarization))
}

pub(crate) fn fresnel_raw(
    n1: Complex64,
    n2: Complex64,
    kx: Complex64,
    pol: Polarization,
) -> (Complex64, Complex64) {
    let q1 = longitudinal(n1, kx);
    let q2 = longitudinal(n2, kx);
    match pol {
        Polarization::S => {
            let den = q1 + q2;
            ((q1 - q2) / den, 2.0 * q1 / den)
        }
        Polarization::P => {
            let (e1, e2) = (n1 * n1, n2 * n2);
            let den = e1 * q2 + e2 * q1;
            ((e1 * q2 - e2 * q1) / den, 2.0 * q1 * n1 * n2 / den)
        }
    }
}

/// Coherent response of `stack` to `wave`.
pub fn stack_response(stack: &LayerStack, wave: &PlaneWave) -> StackResponse {
    solve_raw(
        stack.superstrate.as_complex(),
        stack.layers.iter().map(|l| (l.thickness, l.index.as_complex())),
        stack.substrate.as_complex(),
        wave.wavelength,
        wave.sin_theta(),
        wave.polarization,
    )
}

/// Matrix engine on raw complex indices.
///
/// Each layer matrix is stored as `M e^{i delta}`, which keeps every entry bounded for
/// absorbing layers (`Im delta >= 0`); the dropped factor is tracked in log form and only
/// re-enters the transmitted power.
pub(crate) fn solve_raw<I>(
    superstrate: Complex64,
    layers: I,
    substrate: Complex64,
    wavelength: f64,
    sin_theta: f64,
    pol: Polarization,
) -> StackResponse
where
    I: DoubleEndedIterator<Item = (f64, Complex64)>,
{
    let kx = superstrate * sin_theta;
    let q0 = longitudinal(superstrate, kx);
    let qs = longitudinal(substrate, kx);
    let eta0 = admittance(superstrate, q0, pol);
    let eta_s = admittance(substrate, qs, pol);
    let k0 = 2.0 * PI / wavelength;

    // [B, C] = M_1 ... M_N [1, eta_s], built from the substrate side.
    let mut b = Complex64::new(1.0, 0.0);
    let mut c = eta_s;
    let mut phase_sum = Complex64::new(0.0, 0.0);
    for (thickness, n) in layers.rev() {
        if thickness == 0.0 {
            continue;
        }
        let q = longitudinal(n, kx);
        let eta = admittance(n, q, pol);
        let delta = k0 * thickness * q;
        phase_sum += delta;
        let e = (Complex64::i() * 2.0 * delta).exp();
        let diag = 0.5 * (1.0 + e);
        let off = 0.5 * (1.0 - e);
        let nb = diag * b + off / eta * c;
        let nc = eta * off * b + diag * c;
        b = nb;
        c = nc;
    }

    let den = eta0 * b + c;
    let r = (eta0 * b - c) / den;
    // Tangential-field transmission, then converted to field amplitude for p.
    let t_tan = 2.0 * eta0 * (Complex64::i() * phase_sum).exp() / den;
    let t = match pol {
        Polarization::S => t_tan,
        Polarization::P => t_tan * (q0 / superstrate) / (qs / substrate),
    };
    let reflectance = r.norm_sqr();
    let transmittance = if eta_s.re <= 0.0 {
        0.0
    } else {
        let decay = (-2.0 * phase_sum.im).exp();
        4.0 * eta0.re * eta_s.re * decay / den.norm_sqr() * (eta0.norm_sqr() / (eta0.re * eta0.re))
    };
    let absorptance = (1.0 - reflectance - transmittance).max(0.0);
    StackResponse { r, t, reflectance, transmittance, absorptance }
}

/// Ellipsometric angles `(psi, delta)` in degrees for the ratio `r_p / r_s`.
///
/// `psi` lies in `[0, 90]`, `delta` in `(-180, 180]`.
pub fn ellipsometric_angles(
    stack: &LayerStack,
    wavelength: f64,
    angle_deg: f64,
) -> Result<(f64, f64), OpticsError> {
    if !angle_deg.is_finite() || angle_deg <= 0.0 || angle_deg >= 90.0 {
        return Err(OpticsError::InvalidAngle(angle_deg));
    }
    let wave_s = PlaneWave::new(wavelength, angle_deg, Polarization::S)?;
    let rs = stack_response(stack, &wave_s).r;
    let rp = stack_response(stack, &wave_s.with_polarization(Polarization::P)).r;
    angles_from_ratio(rp, rs)
}

pub(crate) fn angles_from_ratio(rp: Complex64, rs: Complex64) -> Result<(f64, f64), OpticsError> {
    if rs.norm() == 0.0 || !rs.norm().is_finite() {
        return Err(OpticsError::DegenerateGeometry);
    }
    let rho = rp / rs;
    let psi = rho.norm().atan().to_degrees();
    Ok((psi, normalize_degrees(rho.arg().to_degrees())))
}

/// Maps an angle in degrees into `(-180, 180]`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    if a == -180.0 {
        a = 180.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn air() -> ComplexIndex {
        ComplexIndex::lossless(1.0)
    }

    /// Textbook Fresnel equations written directly in terms of angles (independent of the
    /// admittance formulation above).
    fn textbook_rs(n1: f64, n2: f64, theta_deg: f64) -> f64 {
        let ti = theta_deg.to_radians();
        let tt = (n1 * ti.sin() / n2).asin();
        (n1 * ti.cos() - n2 * tt.cos()) / (n1 * ti.cos() + n2 * tt.cos())
    }

    #[test]
    fn normal_incidence_air_to_glass() {
        let wave = PlaneWave::normal(500.0, Polarization::S).unwrap();
        let (r, t) = fresnel_interface(air(), ComplexIndex::lossless(1.5), &wave).unwrap();
        assert!((r.re + 0.2).abs() < 1e-15 && r.im.abs() < 1e-15);
        assert!((r.norm_sqr() - 0.04).abs() < 1e-12);
        assert!((t.re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn identity_interface_is_transparent() {
        let n = ComplexIndex::new(1.7, 0.3).unwrap();
        for pol in [Polarization::S, Polarization::P] {
            for angle in [0.0, 25.0, 60.0, 89.0] {
                let wave = PlaneWave::new(600.0, angle, pol).unwrap();
                let (r, t) = fresnel_interface(n, n, &wave).unwrap();
                assert!(r.norm() < 1e-15);
                assert!((t - 1.0).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn oblique_s_matches_textbook() {
        let expected = textbook_rs(1.0, 1.5, 45.0);
        let wave = PlaneWave::new(600.0, 45.0, Polarization::S).unwrap();
        let (r, _) = fresnel_interface(air(), ComplexIndex::lossless(1.5), &wave).unwrap();
        assert!((r.re - expected).abs() < 1e-14, "{} vs {}", r.re, expected);
        assert!(r.im.abs() < 1e-15);
    }

    #[test]
    fn brewster_angle_kills_p_reflection() {
        let n2 = 1.5f64;
        let brewster = n2.atan().to_degrees();
        let wave = PlaneWave::new(600.0, brewster, Polarization::P).unwrap();
        let (r, _) = fresnel_interface(air(), ComplexIndex::lossless(n2), &wave).unwrap();
        assert!(r.norm() < 1e-12, "{}", r.norm());
    }

    #[test]
    fn grazing_ninety_degrees_rejected() {
        assert_eq!(
            PlaneWave::new(600.0, 90.0, Polarization::S).unwrap_err(),
            OpticsError::InvalidAngle(90.0)
        );
    }

    #[test]
    fn total_internal_reflection_is_unity() {
        let wave = PlaneWave::new(600.0, 60.0, Polarization::S).unwrap();
        let (r, _) = fresnel_interface(ComplexIndex::lossless(1.5), air(), &wave).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-14);
        let stack = LayerStack::new(ComplexIndex::lossless(1.5), air());
        let resp = stack_response(&stack, &wave);
        assert!((resp.reflectance - 1.0).abs() < 1e-12);
        assert!(resp.transmittance.abs() < 1e-12);
    }

    #[test]
    fn free_space() {
        let stack = LayerStack::new(air(), air());
        let resp = stack_response(&stack, &PlaneWave::normal(550.0, Polarization::S).unwrap());
        assert_eq!(resp.reflectance, 0.0);
        assert!((resp.transmittance - 1.0).abs() < 1e-15);
        assert!(resp.absorptance.abs() < 1e-15);
    }

    #[test]
    fn half_wave_layer_is_absentee() {
        let lambda = 600.0;
        let stack = LayerStack::new(air(), ComplexIndex::lossless(1.5))
            .layer(lambda / (2.0 * 2.0), ComplexIndex::lossless(2.0))
            .unwrap();
        let resp = stack_response(&stack, &PlaneWave::normal(lambda, Polarization::S).unwrap());
        assert!((resp.reflectance - 0.04).abs() < 1e-12, "{}", resp.reflectance);
    }

    #[test]
    fn quarter_wave_matches_analytic() {
        let (n0, n1, ns) = (1.0f64, 1.5f64, 2.25f64);
        let lambda = 700.0;
        let expected = ((n0 * ns - n1 * n1) / (n0 * ns + n1 * n1)).powi(2);
        let stack = LayerStack::new(air(), ComplexIndex::lossless(ns))
            .layer(lambda / (4.0 * n1), ComplexIndex::lossless(n1))
            .unwrap();
        for pol in [Polarization::S, Polarization::P] {
            let resp = stack_response(&stack, &PlaneWave::normal(lambda, pol).unwrap());
            assert!((resp.reflectance - expected).abs() < 1e-13);
            assert!((resp.reflectance + resp.transmittance - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thick_absorber_neither_overflows_nor_transmits() {
        let si = ComplexIndex::new(6.5, 1.4).unwrap();
        let stack = LayerStack::new(air(), air()).layer(30_000.0, si).unwrap();
        let resp = stack_response(&stack, &PlaneWave::normal(375.0, Polarization::S).unwrap());
        assert!(resp.reflectance.is_finite() && resp.transmittance.is_finite());
        assert_eq!(resp.transmittance, 0.0);
        // A semi-infinite absorber gives the same reflectance.
        let bulk = LayerStack::new(air(), si);
        let bulk_r = stack_response(&bulk, &PlaneWave::normal(375.0, Polarization::S).unwrap());
        assert!((resp.reflectance - bulk_r.reflectance).abs() < 1e-12);
    }

    #[test]
    fn ellipsometry_on_bare_substrate_at_brewster() {
        let n2 = 1.5f64;
        let stack = LayerStack::new(air(), ComplexIndex::lossless(n2));
        let (psi, _) = ellipsometric_angles(&stack, 600.0, n2.atan().to_degrees()).unwrap();
        assert!(psi.abs() < 1e-10, "{psi}");
    }

    #[test]
    fn ellipsometry_bare_absorber_matches_direct_ratio() {
        // direct two-media Fresnel ratio computed with angles and complex arithmetic
        let n2 = Complex64::new(0.2443, 3.0789);
        let theta = 40f64.to_radians();
        let ci = Complex64::new(theta.cos(), 0.0);
        let st = Complex64::new(theta.sin(), 0.0) / n2;
        let ct = (Complex64::new(1.0, 0.0) - st * st).sqrt();
        let rs = (ci - n2 * ct) / (ci + n2 * ct);
        let rp = (ct - n2 * ci) / (ct + n2 * ci);
        let rho = rp / rs;
        let stack = LayerStack::new(air(), ComplexIndex::new(0.2443, 3.0789).unwrap());
        let (psi, delta) = ellipsometric_angles(&stack, 600.0, 40.0).unwrap();
        assert!((psi - rho.norm().atan().to_degrees()).abs() < 1e-10);
        assert!((delta - rho.arg().to_degrees()).abs() < 1e-10);
    }

    #[test]
    fn ellipsometry_rejects_normal_incidence() {
        let stack = LayerStack::new(air(), ComplexIndex::lossless(1.5));
        assert!(matches!(ellipsometric_angles(&stack, 600.0, 0.0), Err(OpticsError::InvalidAngle(_))));
    }

    #[test]
    fn degenerate_ratio_is_an_error() {
        assert_eq!(
            angles_from_ratio(Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)),
            Err(OpticsError::DegenerateGeometry)
        );
    }

    // Conjugating every index is the same physics under the opposite time convention,
    // which also flips the sign of the propagation phase (hence the negated thickness).
    // A bare interface has no propagation phase, so conjugation alone suffices there.
    #[test]
    fn conjugated_media_flip_delta() {
        let layers = [(87.0, Complex64::new(1.9, 0.05)), (40.0, Complex64::new(1.3, 0.2))];
        let sub = Complex64::new(0.3, 3.1);
        let sin = 50f64.to_radians().sin();
        let angles = |conj: bool| {
            let f = |c: Complex64| if conj { c.conj() } else { c };
            let d = |t: f64| if conj { -t } else { t };
            let sup = Complex64::new(1.0, 0.0);
            let rs = solve_raw(sup, layers.iter().map(|&(t, n)| (d(t), f(n))), f(sub), 633.0, sin, Polarization::S).r;
            let rp = solve_raw(sup, layers.iter().map(|&(t, n)| (d(t), f(n))), f(sub), 633.0, sin, Polarization::P).r;
            angles_from_ratio(rp, rs).unwrap()
        };
        let bare = |conj: bool| {
            let f = |c: Complex64| if conj { c.conj() } else { c };
            let sup = Complex64::new(1.0, 0.0);
            let rs = solve_raw(sup, std::iter::empty(), f(sub), 633.0, sin, Polarization::S).r;
            let rp = solve_raw(sup, std::iter::empty(), f(sub), 633.0, sin, Polarization::P).r;
            angles_from_ratio(rp, rs).unwrap()
        };
        let ((p0, d0), (p1, d1)) = (bare(false), bare(true));
        assert!((p0 - p1).abs() < 1e-10 && (d0 + d1).abs() < 1e-10);
        let (psi, delta) = angles(false);
        let (psi_c, delta_c) = angles(true);
        assert!((psi - psi_c).abs() < 1e-10);
        assert!((delta + delta_c).abs() < 1e-10, "{delta} {delta_c}");
    }

    #[test]
    fn permittivity_round_trip() {
        for (n, k) in [(1.4, 0.0), (0.2443, 3.0789), (3.9, 0.02)] {
            let idx = ComplexIndex::new(n, k).unwrap();
            let back = ComplexIndex::from_permittivity(idx.permittivity()).unwrap();
            assert!((back.n() - n).abs() <= 1e-12 * n.max(1.0));
            assert!((back.k() - k).abs() <= 1e-12 * n.max(1.0));
        }
        assert!(ComplexIndex::new(1.5, -0.1).is_err());
    }

    #[test]
    fn delta_normalization() {
        assert_eq!(normalize_degrees(-180.0), 180.0);
        assert_eq!(normalize_degrees(180.0), 180.0);
        assert!((normalize_degrees(190.0) + 170.0).abs() < 1e-12);
        assert!((normalize_degrees(-540.0) - 180.0).abs() < 1e-12);
    }

    fn lossless_stack() -> impl Strategy<Value = LayerStack> {
        (
            1.0f64..3.0,
            1.0f64..3.0,
            proptest::collection::vec((0.0f64..500.0, 1.0f64..3.0), 0..=10),
        )
            .prop_map(|(sup, sub, layers)| {
                let layers = layers
                    .into_iter()
                    .map(|(t, n)| Layer { thickness: t, index: ComplexIndex::lossless(n) })
                    .collect();
                LayerStack::with_layers(ComplexIndex::lossless(sup), layers, ComplexIndex::lossless(sub))
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn lossless_conserves_energy(stack in lossless_stack(), lambda in 300.0f64..1000.0, angle in 0.0f64..60.0) {
            for pol in [Polarization::S, Polarization::P] {
                let resp = stack_response(&stack, &PlaneWave::new(lambda, angle, pol).unwrap());
                prop_assert!((resp.reflectance + resp.transmittance - 1.0).abs() < 1e-9);
                prop_assert!(resp.absorptance < 1e-9);
            }
        }

        #[test]
        fn zero_thickness_layer_is_inert(stack in lossless_stack(), pos in 0usize..11, n in 1.0f64..3.0, k in 0.0f64..2.0) {
            let wave = PlaneWave::new(550.0, 30.0, Polarization::P).unwrap();
            let base = stack_response(&stack, &wave);
            let mut layers = stack.layers().to_vec();
            let pos = pos.min(layers.len());
            layers.insert(pos, Layer { thickness: 0.0, index: ComplexIndex::new(n, k).unwrap() });
            let with = LayerStack::with_layers(stack.superstrate(), layers, stack.substrate()).unwrap();
            let resp = stack_response(&with, &wave);
            prop_assert!((resp.r - base.r).norm() <= 1e-12);
            prop_assert!((resp.t - base.t).norm() <= 1e-12);
        }

        #[test]
        fn adjacent_identical_layers_merge(t1 in 0.0f64..300.0, t2 in 0.0f64..300.0, n in 1.0f64..3.0, k in 0.0f64..0.5, angle in 0.0f64..70.0) {
            let idx = ComplexIndex::new(n, k).unwrap();
            let sub = ComplexIndex::lossless(1.5);
            let split = LayerStack::new(ComplexIndex::lossless(1.0), sub).layer(t1, idx).unwrap().layer(t2, idx).unwrap();
            let merged = LayerStack::new(ComplexIndex::lossless(1.0), sub).layer(t1 + t2, idx).unwrap();
            for pol in [Polarization::S, Polarization::P] {
                let wave = PlaneWave::new(480.0, angle, pol).unwrap();
                let a = stack_response(&split, &wave);
                let b = stack_response(&merged, &wave);
                prop_assert!((a.r - b.r).norm() <= 1e-12);
                prop_assert!((a.reflectance - b.reflectance).abs() <= 1e-12);
            }
        }

        #[test]
        fn reciprocity_at_normal_incidence(stack in lossless_stack(), lambda in 300.0f64..1000.0) {
            let wave = PlaneWave::normal(lambda, Polarization::S).unwrap();
            let fwd = stack_response(&stack, &wave).reflectance;
            let back = stack_response(&stack.reversed(), &wave).reflectance;
            prop_assert!((fwd - back).abs() < 1e-9);
        }

        #[test]
        fn s_and_p_agree_at_normal_incidence(stack in lossless_stack(), lambda in 300.0f64..1000.0) {
            let s = stack_response(&stack, &PlaneWave::normal(lambda, Polarization::S).unwrap());
            let p = stack_response(&stack, &PlaneWave::normal(lambda, Polarization::P).unwrap());
            prop_assert!((s.r - p.r).norm() < 1e-12);
            prop_assert!((s.t - p.t).norm() < 1e-12);
        }
    }
}
