//! The virtual self-referenced scattering platform.
//!
//! One SLM feeds a disordered medium that is modeled as a single wide
//! complex matrix whose columns are split into a signal partition (the
//! controllable input modes) and a static reference partition. The
//! reference partition carries a fixed field pattern, so every camera
//! frame contains the scattered reference background `s` plus whatever
//! signal field the caller launches, interfering on a square-law
//! detector:
//!
//! ```text
//! I_m = noise(|e^{i phi} u_m + s_m|^2),   u = T_signal · x,   s = T_ref · r
//! ```
//!
//! With the camera noiseless the capture is exactly deterministic and
//! algebraically equal to the modulus-square above; the noise chain
//! applies photon (Poisson) noise, additive Gaussian read noise and
//! bit-depth quantization, in that physical order.

use num_complex::Complex64;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_medium, CMatrix, CVector};
use crate::rng::SeededRng;

pub const TAU: f64 = std::f64::consts::TAU;

/// How the SLM realizes masks. Arbitrary complex fields are always
/// launchable (upstream amplitude synthesis); the mode only selects the
/// default focusing-mask family and its quantization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulationMode {
    IdealComplex,
    PhaseOnlyQuantized,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlmConfig {
    /// Signal macro-pixels N.
    pub mode_count: usize,
    /// Addressable phase levels (10-bit hardware -> 1024).
    pub phase_levels: u32,
    pub modulation: ModulationMode,
}

impl SlmConfig {
    pub fn new(mode_count: usize, phase_levels: u32, modulation: ModulationMode) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::invalid("SLM mode count must be >= 1"));
        }
        if phase_levels < 2 {
            return Err(Error::invalid("SLM needs at least 2 phase levels"));
        }
        Ok(SlmConfig {
            mode_count,
            phase_levels,
            modulation,
        })
    }

    pub fn ideal(mode_count: usize) -> Self {
        SlmConfig::new(mode_count, 1024, ModulationMode::IdealComplex).unwrap()
    }

    pub fn phase_only(mode_count: usize) -> Self {
        SlmConfig::new(mode_count, 1024, ModulationMode::PhaseOnlyQuantized).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Uniform,
    Annular,
}

/// Reference-arm layout. An annulus activates a fraction of the
/// reference modes proportional to its aperture area; the total
/// reference power is held at `reference_power_fraction` of the total
/// input power (taking the conventional unit-power signal).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGeometry {
    pub kind: GeometryKind,
    pub inner_fraction: f64,
    pub outer_fraction: f64,
    pub reference_power_fraction: f64,
}

impl ReferenceGeometry {
    pub fn uniform(reference_power_fraction: f64) -> Result<Self> {
        let g = ReferenceGeometry {
            kind: GeometryKind::Uniform,
            inner_fraction: 0.0,
            outer_fraction: 1.0,
            reference_power_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn annular(inner: f64, outer: f64, reference_power_fraction: f64) -> Result<Self> {
        let g = ReferenceGeometry {
            kind: GeometryKind::Annular,
            inner_fraction: inner,
            outer_fraction: outer,
            reference_power_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_power_fraction > 0.0 && self.reference_power_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "reference power fraction must be in (0,1), got {}",
                self.reference_power_fraction
            )));
        }
        if self.kind == GeometryKind::Annular
            && !(0.0 <= self.inner_fraction
                && self.inner_fraction < self.outer_fraction
                && self.outer_fraction <= 1.0)
        {
            return Err(Error::invalid(format!(
                "annulus requires 0 <= inner < outer <= 1, got [{}, {}]",
                self.inner_fraction, self.outer_fraction
            )));
        }
        Ok(())
    }

    /// Fraction of the aperture the geometry occupies.
    pub fn active_area_fraction(&self) -> f64 {
        match self.kind {
            GeometryKind::Uniform => 1.0,
            GeometryKind::Annular => {
                self.outer_fraction * self.outer_fraction
                    - self.inner_fraction * self.inner_fraction
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            GeometryKind::Uniform => {
                format!("uniform(power={})", self.reference_power_fraction)
            }
            GeometryKind::Annular => format!(
                "annular({}..{}, power={})",
                self.inner_fraction, self.outer_fraction, self.reference_power_fraction
            ),
        }
    }
}

/// Square-law camera. `photon_budget` is the expected photon count at
/// unit intensity (infinite = noiseless); read noise is additive
/// Gaussian in counts; `bit_depth` quantizes to `full_scale / 2^bits`
/// steps (0 = no quantization).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CameraModel {
    pub photon_budget: f64,
    pub read_noise_sigma: f64,
    pub bit_depth: u32,
    pub full_scale: f64,
}

impl CameraModel {
    pub fn noiseless() -> Self {
        CameraModel {
            photon_budget: f64::INFINITY,
            read_noise_sigma: 0.0,
            bit_depth: 0,
            full_scale: 4.0,
        }
    }

    pub fn poisson(photon_budget: f64) -> Result<Self> {
        let cam = CameraModel {
            photon_budget,
            ..CameraModel::noiseless()
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.photon_budget.is_nan() || self.photon_budget <= 0.0 {
            return Err(Error::invalid("photon budget must be positive"));
        }
        if self.read_noise_sigma < 0.0 {
            return Err(Error::invalid("read noise sigma must be >= 0"));
        }
        if self.full_scale <= 0.0 {
            return Err(Error::invalid("camera full scale must be positive"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.photon_budget.is_infinite() && self.read_noise_sigma == 0.0 && self.bit_depth == 0
    }

    fn apply(&self, intensity: f64, rng: &mut SeededRng) -> f64 {
        let mut v = intensity;
        if self.photon_budget.is_finite() {
            let lambda = self.photon_budget * v;
            v = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive lambda").sample(rng) / self.photon_budget
            } else {
                0.0
            };
        }
        if self.read_noise_sigma > 0.0 {
            let noise: f64 = Normal::new(0.0, self.read_noise_sigma)
                .expect("valid sigma")
                .sample(rng);
            v += noise;
        }
        v = v.max(0.0);
        if self.bit_depth > 0 {
            let lsb = self.full_scale / (1u64 << self.bit_depth) as f64;
            v = ((v / lsb).round() * lsb).min(self.full_scale);
        }
        v
    }
}

/// One camera frame: nonnegative counts, one per output channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityFrame(pub Vec<f64>);

impl IntensityFrame {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The virtual platform: medium, static reference, SLM and camera.
///
/// Immutable after construction except for the camera RNG; captures
/// therefore take `&mut self`. Swapping the reference geometry
/// recomputes the scattered reference field `s` but never touches the
/// medium.
#[derive(Clone, Debug)]
pub struct ScatteringBench {
    medium: CMatrix,
    signal_modes: usize,
    reference_modes: usize,
    geometry: ReferenceGeometry,
    reference_pattern: CVector,
    reference_field: CVector,
    pub slm: SlmConfig,
    pub camera: CameraModel,
    camera_rng: SeededRng,
    master_seed: u64,
}

impl ScatteringBench {
    pub fn new(
        slm: SlmConfig,
        geometry: ReferenceGeometry,
        camera: CameraModel,
        channels: usize,
        reference_modes: usize,
        master_seed: u64,
    ) -> Result<Self> {
        geometry.validate()?;
        camera.validate()?;
        if channels == 0 {
            return Err(Error::invalid("bench needs at least one output channel"));
        }
        if reference_modes == 0 {
            return Err(Error::invalid("bench needs at least one reference mode"));
        }
        let n_total = slm.mode_count + reference_modes;
        let mut medium_rng = SeededRng::new(master_seed, "bench/medium");
        let medium = gaussian_medium(channels, n_total, &mut medium_rng)?;
        let camera_rng = SeededRng::new(master_seed, "bench/camera");
        let mut bench = ScatteringBench {
            medium,
            signal_modes: slm.mode_count,
            reference_modes,
            geometry: geometry.clone(),
            reference_pattern: CVector::zeros(reference_modes),
            reference_field: CVector::zeros(channels),
            slm,
            camera,
            camera_rng,
            master_seed,
        };
        bench.set_reference_geometry(geometry)?;
        Ok(bench)
    }

    /// Noiseless ideal-modulation bench with a uniform half-power
    /// reference; the default fixture for protocol tests.
    pub fn noiseless(modes: usize, channels: usize, master_seed: u64) -> Result<Self> {
        ScatteringBench::new(
            SlmConfig::ideal(modes),
            ReferenceGeometry::uniform(0.5)?,
            CameraModel::noiseless(),
            channels,
            (modes / 4).max(4),
            master_seed,
        )
    }

    pub fn signal_modes(&self) -> usize {
        self.signal_modes
    }

    pub fn channels(&self) -> usize {
        self.medium.nrows()
    }

    pub fn reference_modes(&self) -> usize {
        self.reference_modes
    }

    pub fn geometry(&self) -> &ReferenceGeometry {
        &self.geometry
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Scattered reference background `s` at the camera plane.
    pub fn reference_field(&self) -> &CVector {
        &self.reference_field
    }

    /// Ground-truth signal block of the medium (digital-twin accessor
    /// used by oracles and identity tests).
    pub fn medium_signal(&self) -> CMatrix {
        self.medium.columns(0, self.signal_modes).into_owned()
    }

    /// Re-aim the reference arm. The medium is untouched; only the
    /// reference pattern and the cached `s` change.
    pub fn set_reference_geometry(&mut self, geometry: ReferenceGeometry) -> Result<()> {
        geometry.validate()?;
        let r_total = self.reference_modes;
        let active = ((r_total as f64 * geometry.active_area_fraction()).round() as usize)
            .clamp(1, r_total);
        let rho = geometry.reference_power_fraction;
        // Unit-power signal convention: the reference arm carries
        // rho/(1-rho) so its share of the total input power is rho.
        let ref_power = rho / (1.0 - rho);
        let amp = (ref_power / active as f64).sqrt();
        let mut pattern = CVector::zeros(r_total);
        for i in 0..active {
            pattern[i] = Complex64::new(amp, 0.0);
        }
        let t_ref = self.medium.columns(self.signal_modes, r_total);
        self.reference_field = t_ref * &pattern;
        self.reference_pattern = pattern;
        self.geometry = geometry;
        Ok(())
    }

    /// Noiseless field at the camera plane when `signal` drives the
    /// signal partition alone (reference excluded).
    pub fn propagate(&self, signal: &CVector) -> Result<CVector> {
        if signal.len() != self.signal_modes {
            return Err(Error::DimensionMismatch {
                context: "propagate",
                expected: self.signal_modes,
                actual: signal.len(),
            });
        }
        let t_sig = self.medium.columns(0, self.signal_modes);
        Ok(t_sig * signal)
    }

    /// Square-law camera frame of the interfering signal and reference:
    /// `I_m = noise(|e^{i phi} u_m + s_m|^2)`.
    pub fn capture(&mut self, signal: &CVector, global_phase: f64) -> Result<IntensityFrame> {
        let u = self.propagate(signal)?;
        let rot = Complex64::from_polar(1.0, global_phase);
        let mut counts = Vec::with_capacity(u.len());
        if self.camera.is_noiseless() {
            for m in 0..u.len() {
                counts.push((rot * u[m] + self.reference_field[m]).norm_sqr());
            }
        } else {
            for m in 0..u.len() {
                let ideal = (rot * u[m] + self.reference_field[m]).norm_sqr();
                counts.push(self.camera.apply(ideal, &mut self.camera_rng));
            }
        }
        Ok(IntensityFrame(counts))
    }

    /// The four frames of one phase-stepping cycle, phases 0, pi/2, pi,
    /// 3pi/2 in order.
    pub fn capture_quad(&mut self, signal: &CVector) -> Result<[IntensityFrame; 4]> {
        Ok([
            self.capture(signal, 0.0)?,
            self.capture(signal, TAU / 4.0)?,
            self.capture(signal, TAU / 2.0)?,
            self.capture(signal, 3.0 * TAU / 4.0)?,
        ])
    }

    /// Reference-only blank frame (dark signal partition).
    pub fn capture_blank(&mut self) -> Result<IntensityFrame> {
        let zero = CVector::zeros(self.signal_modes);
        self.capture(&zero, 0.0)
    }
}

/// Round each phase to the nearest of `levels` equally spaced SLM
/// levels; results wrapped into [0, 2*pi).
pub fn quantize_phase(phases: &[f64], levels: u32) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::invalid("phase quantization needs >= 2 levels"));
    }
    let step = TAU / levels as f64;
    Ok(phases
        .iter()
        .map(|&p| {
            let q = (p / step).round() * step;
            let wrapped = q.rem_euclid(TAU);
            if wrapped >= TAU {
                0.0
            } else {
                wrapped
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::all_finite;
    use rand::Rng;

    fn unit_basis(n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn propagate_zero_is_zero() {
        let bench = ScatteringBench::noiseless(8, 16, 3).unwrap();
        let u = bench.propagate(&CVector::zeros(8)).unwrap();
        assert!(u.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn propagate_basis_vector_reads_medium_column() {
        let bench = ScatteringBench::noiseless(8, 16, 3).unwrap();
        let t = bench.medium_signal();
        for k in 0..8 {
            let u = bench.propagate(&unit_basis(8, k)).unwrap();
            for m in 0..16 {
                assert_eq!(u[m], t[(m, k)]);
            }
        }
    }

    #[test]
    fn propagate_is_linear() {
        let bench = ScatteringBench::noiseless(6, 12, 5).unwrap();
        let mut rng = SeededRng::new(5, "lin");
        let x = CVector::from_fn(6, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let y = CVector::from_fn(6, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let lhs = bench.propagate(&(&x + &y)).unwrap();
        let rhs = bench.propagate(&x).unwrap() + bench.propagate(&y).unwrap();
        for m in 0..12 {
            assert!((lhs[m] - rhs[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn propagate_rejects_wrong_length() {
        let bench = ScatteringBench::noiseless(8, 16, 3).unwrap();
        assert!(matches!(
            bench.propagate(&CVector::zeros(7)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn blank_frame_is_reference_intensity() {
        let mut bench = ScatteringBench::noiseless(8, 16, 7).unwrap();
        let blank = bench.capture_blank().unwrap();
        let s = bench.reference_field().clone();
        for m in 0..16 {
            assert_eq!(blank.0[m], s[m].norm_sqr());
        }
    }

    #[test]
    fn square_law_removes_global_phase_without_reference() {
        // Blocked reference arm (s = 0): capture must not depend on the
        // global phase.
        let mut bench = ScatteringBench::noiseless(8, 16, 11).unwrap();
        bench.reference_field = CVector::zeros(16);
        let mut rng = SeededRng::new(11, "phase");
        let x = CVector::from_fn(8, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let i0 = bench.capture(&x, 0.0).unwrap();
        let i1 = bench.capture(&x, 1.234).unwrap();
        let u = bench.propagate(&x).unwrap();
        for m in 0..16 {
            assert!((i0.0[m] - i1.0[m]).abs() < 1e-12);
            assert!((i0.0[m] - u[m].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_phases_cancel_cross_term() {
        // I(0) + I(pi) = 2(|u|^2 + |s|^2) per channel.
        let mut bench = ScatteringBench::noiseless(8, 16, 13).unwrap();
        let mut rng = SeededRng::new(13, "cross");
        let x = CVector::from_fn(8, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let i0 = bench.capture(&x, 0.0).unwrap();
        let ipi = bench.capture(&x, TAU / 2.0).unwrap();
        let u = bench.propagate(&x).unwrap();
        let s = bench.reference_field();
        for m in 0..16 {
            let expect = 2.0 * (u[m].norm_sqr() + s[m].norm_sqr());
            assert!((i0.0[m] + ipi.0[m] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_capture_matches_formula_exactly() {
        let mut bench = ScatteringBench::noiseless(4, 8, 17).unwrap();
        let mut rng = SeededRng::new(17, "exact");
        let x = CVector::from_fn(4, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let phi = 0.7;
        let frame = bench.capture(&x, phi).unwrap();
        let u = bench.propagate(&x).unwrap();
        let s = bench.reference_field();
        let rot = Complex64::from_polar(1.0, phi);
        for m in 0..8 {
            assert_eq!(frame.0[m], (rot * u[m] + s[m]).norm_sqr());
        }
    }

    #[test]
    fn energy_roughly_conserved_for_square_medium() {
        // M = N + R: total camera counts track total input power.
        let modes = 192;
        let refs = 64;
        let channels = modes + refs;
        let mut totals = 0.0;
        let seeds = 8;
        for seed in 0..seeds {
            let mut bench = ScatteringBench::new(
                SlmConfig::ideal(modes),
                ReferenceGeometry::uniform(0.5).unwrap(),
                CameraModel::noiseless(),
                channels,
                refs,
                seed,
            )
            .unwrap();
            let mut rng = SeededRng::new(seed, "energy");
            let mut x = CVector::from_fn(modes, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let norm = x.norm();
            x /= Complex64::new(norm, 0.0);
            totals += bench.capture(&x, 0.0).unwrap().total();
        }
        let mean = totals / seeds as f64;
        // signal power 1 plus reference power rho/(1-rho) = 1.
        let expected = 2.0;
        assert!(
            (mean - expected).abs() / expected < 0.10,
            "mean total {mean}, expected {expected}"
        );
    }

    #[test]
    fn geometry_swap_changes_reference_not_medium() {
        let mut bench = ScatteringBench::noiseless(8, 16, 23).unwrap();
        let t_before = bench.medium_signal();
        let s_before = bench.reference_field().clone();
        bench
            .set_reference_geometry(ReferenceGeometry::annular(0.2, 0.6, 0.3).unwrap())
            .unwrap();
        assert_eq!(bench.medium_signal(), t_before);
        let s_after = bench.reference_field();
        assert!(s_after.norm() > 0.0);
        assert_ne!(&s_before, s_after);
    }

    #[test]
    fn noisy_capture_is_reproducible_per_seed() {
        let make = || {
            ScatteringBench::new(
                SlmConfig::ideal(4),
                ReferenceGeometry::uniform(0.5).unwrap(),
                CameraModel {
                    photon_budget: 1e4,
                    read_noise_sigma: 0.01,
                    bit_depth: 10,
                    full_scale: 4.0,
                },
                8,
                4,
                99,
            )
            .unwrap()
        };
        let x = unit_basis(4, 0);
        let mut a = make();
        let mut b = make();
        assert_eq!(a.capture(&x, 0.0).unwrap(), b.capture(&x, 0.0).unwrap());
        // Counts stay nonnegative under read noise and quantization.
        let frame = a.capture(&x, 0.0).unwrap();
        assert!(frame.0.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn quantize_phase_examples() {
        let q = quantize_phase(&[std::f64::consts::PI / 3.0], 4).unwrap();
        assert!((q[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let phases: Vec<f64> = (0..100).map(|k| k as f64 * 0.0618).collect();
        let q = quantize_phase(&phases, 1024).unwrap();
        for (p, qp) in phases.iter().zip(&q) {
            let wrapped = p.rem_euclid(TAU);
            let mut d = (wrapped - qp).abs();
            d = d.min(TAU - d);
            assert!(d <= std::f64::consts::PI / 1024.0 + 1e-12);
            assert!(*qp >= 0.0 && *qp < TAU);
        }

        let q = quantize_phase(&[0.1, 3.0, 6.0], 2).unwrap();
        for v in q {
            assert!(v == 0.0 || (v - std::f64::consts::PI).abs() < 1e-15);
        }

        assert!(quantize_phase(&[0.0], 1).is_err());
    }

    #[test]
    fn medium_is_finite() {
        let bench = ScatteringBench::noiseless(16, 32, 1).unwrap();
        assert!(all_finite(&bench.medium_signal()));
    }
}
