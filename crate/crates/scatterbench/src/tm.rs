//! Phase-stepped transmission-matrix measurement and phase-conjugate
//! focusing.
//!
//! The self-referenced acquisition drives one input-basis vector at a
//! time, steps the signal arm through four global phases and
//! demodulates the cross term against the static reference:
//!
//! ```text
//! z_m = [(I_0 - I_pi) + i (I_3pi/2 - I_pi/2)] / 4 = u_m * conj(s_m)
//! ```
//!
//! Stacking the demodulated responses and undoing the input basis
//! recovers the observed matrix `t_hat = conj(s) (.) T`, each medium row
//! tagged by the conjugate reference at that channel. Conjugating a row
//! of `t_hat` and driving it back through the bench concentrates light
//! on the chosen output channel; the enhancement metric is the focused
//! intensity over the mean background after reference-blank subtraction.
//! Focus maps are acquired at two opposite phases so the
//! signal-reference cross term cancels, leaving `|u|^2` after blank
//! subtraction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bench::{quantize_phase, IntensityFrame, ReferenceGeometry, ScatteringBench, SlmConfig, TAU};
use crate::error::{Error, Result};
use crate::linalg::{hadamard_matrix, CMatrix, CVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputBasis {
    Canonical,
    Hadamard,
}

/// Observed transmission matrix: rows are camera channels, columns
/// canonical input modes, entries `conj(s_m) * t_mn`.
#[derive(Clone, Debug)]
pub struct ObservedTM {
    pub matrix: CMatrix,
    pub input_basis: InputBasis,
    pub frames_used: usize,
    /// Reference-only blank acquired with the matrix (|s|^2 per channel).
    pub blank: IntensityFrame,
}

impl ObservedTM {
    pub fn channels(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn modes(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    PhaseOnly,
    Complex,
}

#[derive(Clone, Debug, Serialize)]
pub struct FocusReport {
    pub target_channel: usize,
    pub enhancement: f64,
    /// Blank-subtracted focus intensity map (|u|^2 in the noiseless bench).
    pub focus_map: IntensityFrame,
    pub mode_count: usize,
}

/// Four-phase interferometric demodulation.
///
/// Frames must be taken at signal phases 0, pi/2, pi, 3pi/2. In the
/// noiseless bench the result for input `x` equals
/// `(T x) (.) conj(s)` channel-wise.
pub fn demodulate_four_phase(
    i0: &IntensityFrame,
    i_half_pi: &IntensityFrame,
    i_pi: &IntensityFrame,
    i_three_half_pi: &IntensityFrame,
) -> Result<CVector> {
    let m = i0.len();
    for frame in [i_half_pi, i_pi, i_three_half_pi] {
        if frame.len() != m {
            return Err(Error::DimensionMismatch {
                context: "demodulate_four_phase",
                expected: m,
                actual: frame.len(),
            });
        }
    }
    Ok(CVector::from_fn(m, |k, _| {
        Complex64::new(
            (i0.0[k] - i_pi.0[k]) / 4.0,
            (i_three_half_pi.0[k] - i_half_pi.0[k]) / 4.0,
        )
    }))
}

pub fn demodulate_quad(frames: &[IntensityFrame; 4]) -> Result<CVector> {
    demodulate_four_phase(&frames[0], &frames[1], &frames[2], &frames[3])
}

/// Acquire the observed transmission matrix: one reference-only blank,
/// then four phase-stepped frames per basis vector (4N + 1 frames
/// total; 1,025 at N = 256). Hadamard responses are converted back to
/// canonical columns digitally.
pub fn measure_tm(bench: &mut ScatteringBench, basis: InputBasis) -> Result<ObservedTM> {
    let n = bench.signal_modes();
    let m = bench.channels();
    let basis_matrix = match basis {
        InputBasis::Canonical => CMatrix::identity(n, n),
        InputBasis::Hadamard => hadamard_matrix(n)?,
    };

    let blank = bench.capture_blank()?;
    let mut responses = CMatrix::zeros(m, n);
    for k in 0..n {
        let input: CVector = basis_matrix.column(k).into_owned();
        let frames = bench.capture_quad(&input)?;
        let z = demodulate_quad(&frames)?;
        responses.set_column(k, &z);
    }

    let matrix = match basis {
        InputBasis::Canonical => responses,
        InputBasis::Hadamard => {
            // H^{-1} = H^T / n for the Sylvester construction.
            let inv = basis_matrix.transpose() / Complex64::new(n as f64, 0.0);
            responses * inv
        }
    };

    Ok(ObservedTM {
        matrix,
        input_basis: basis,
        frames_used: 4 * n + 1,
        blank,
    })
}

/// Phase-conjugate mask for one target channel.
///
/// Complex mode returns the conjugated matrix row at unit power;
/// phase-only mode keeps the conjugate phases, sets uniform amplitude
/// and rounds the phases to the SLM's quantization grid.
pub fn focus_mask(
    tm: &ObservedTM,
    target: usize,
    mode: MaskMode,
    slm: &SlmConfig,
) -> Result<CVector> {
    if target >= tm.channels() {
        return Err(Error::invalid(format!(
            "focus target {target} out of range (channels = {})",
            tm.channels()
        )));
    }
    let n = tm.modes();
    let row = tm.matrix.row(target);
    match mode {
        MaskMode::Complex => {
            let norm: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::invalid("focus row is identically zero"));
            }
            Ok(CVector::from_fn(n, |k, _| row[k].conj() / norm))
        }
        MaskMode::PhaseOnly => {
            let phases: Vec<f64> = row.iter().map(|z| (-z.arg()).rem_euclid(TAU)).collect();
            let quantized = quantize_phase(&phases, slm.phase_levels)?;
            let amp = 1.0 / (n as f64).sqrt();
            Ok(CVector::from_fn(n, |k, _| {
                Complex64::from_polar(amp, quantized[k])
            }))
        }
    }
}

/// Focusing enhancement: blank-subtracted target intensity over the
/// blank-subtracted mean of all non-target channels, both floored at
/// zero. Undefined when every non-target channel is zero after
/// subtraction.
pub fn enhancement(frame: &IntensityFrame, blank: &IntensityFrame, target: usize) -> Result<f64> {
    let m = frame.len();
    if blank.len() != m {
        return Err(Error::DimensionMismatch {
            context: "enhancement blank",
            expected: m,
            actual: blank.len(),
        });
    }
    if m < 2 {
        return Err(Error::invalid("enhancement needs at least 2 channels"));
    }
    if target >= m {
        return Err(Error::invalid(format!("target {target} out of range")));
    }
    let sub = |k: usize| (frame.0[k] - blank.0[k]).max(0.0);
    let numer = sub(target);
    let mut background = 0.0;
    for k in 0..m {
        if k != target {
            background += sub(k);
        }
    }
    let denom = background / (m - 1) as f64;
    if denom <= 0.0 {
        return Err(Error::UndefinedBackground);
    }
    Ok(numer / denom)
}

/// Drive a focusing mask and evaluate it: two opposite-phase frames
/// cancel the signal-reference cross term, one blank removes |s|^2.
pub fn measure_focus(
    bench: &mut ScatteringBench,
    tm: &ObservedTM,
    target: usize,
    mode: MaskMode,
) -> Result<FocusReport> {
    let mask = focus_mask(tm, target, mode, &bench.slm)?;
    let i0 = bench.capture(&mask, 0.0)?;
    let i_pi = bench.capture(&mask, TAU / 2.0)?;
    let blank = bench.capture_blank()?;
    let m = bench.channels();
    let averaged = IntensityFrame((0..m).map(|k| 0.5 * (i0.0[k] + i_pi.0[k])).collect());
    let eta = enhancement(&averaged, &blank, target)?;
    let map = IntensityFrame(
        (0..m)
            .map(|k| (averaged.0[k] - blank.0[k]).max(0.0))
            .collect(),
    );
    Ok(FocusReport {
        target_channel: target,
        enhancement: eta,
        focus_map: map,
        mode_count: tm.modes(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeScalingRow {
    pub modes: usize,
    pub mean_enhancement: f64,
    pub max_enhancement: f64,
}

/// Noiseless phase-only bench with mode count `n`, the default fixture
/// for scaling runs.
pub fn scaling_bench(n: usize, channels: usize, seed: u64) -> Result<ScatteringBench> {
    ScatteringBench::new(
        SlmConfig::phase_only(n),
        ReferenceGeometry::uniform(0.5)?,
        crate::bench::CameraModel::noiseless(),
        channels,
        (n / 4).max(4),
        seed,
    )
}

/// Mode-number scaling: re-measure and re-focus a fresh bench per
/// (seed, mode count) and tabulate the enhancement statistics.
pub fn mode_scaling_experiment(
    mode_counts: &[usize],
    seeds: &[u64],
    target: usize,
    basis_for: fn(usize) -> InputBasis,
    mode: MaskMode,
    bench_factory: &dyn Fn(usize, u64) -> Result<ScatteringBench>,
) -> Result<Vec<ModeScalingRow>> {
    if mode_counts.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("mode scaling needs modes and seeds"));
    }
    let mut rows = Vec::with_capacity(mode_counts.len());
    for &n in mode_counts {
        let mut etas = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut bench = bench_factory(n, seed)?;
            let tm = measure_tm(&mut bench, basis_for(n))?;
            let report = measure_focus(&mut bench, &tm, target, mode)?;
            etas.push(report.enhancement);
        }
        let mean = etas.iter().sum::<f64>() / etas.len() as f64;
        let max = etas.iter().cloned().fold(f64::MIN, f64::max);
        rows.push(ModeScalingRow {
            modes: n,
            mean_enhancement: mean,
            max_enhancement: max,
        });
    }
    Ok(rows)
}

/// Expected phase-only enhancement for N controlled modes over a
/// Gaussian medium: 1 + (pi/4)(N - 1).
pub fn phase_only_enhancement_law(modes: usize) -> f64 {
    1.0 + std::f64::consts::FRAC_PI_4 * (modes as f64 - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryEvaluation {
    pub geometry: ReferenceGeometry,
    pub enhancement: f64,
}

#[derive(Clone, Debug)]
pub struct ScreeningOutcome {
    pub evaluations: Vec<GeometryEvaluation>,
    pub best_index: usize,
    pub best_report: FocusReport,
}

/// Re-measure and re-focus under each candidate reference geometry and
/// keep the best. The bench is left configured at the winning geometry.
pub fn screen_reference_geometry(
    bench: &mut ScatteringBench,
    geometries: &[ReferenceGeometry],
    target: usize,
    basis: InputBasis,
    mode: MaskMode,
) -> Result<ScreeningOutcome> {
    if geometries.is_empty() {
        return Err(Error::invalid("screening needs at least one geometry"));
    }
    let mut evaluations = Vec::with_capacity(geometries.len());
    let mut best: Option<(usize, FocusReport)> = None;
    for (idx, geometry) in geometries.iter().enumerate() {
        bench.set_reference_geometry(geometry.clone())?;
        let tm = measure_tm(bench, basis)?;
        let report = measure_focus(bench, &tm, target, mode)?;
        evaluations.push(GeometryEvaluation {
            geometry: geometry.clone(),
            enhancement: report.enhancement,
        });
        let better = match &best {
            None => true,
            Some((_, current)) => report.enhancement > current.enhancement,
        };
        if better {
            best = Some((idx, report));
        }
    }
    let (best_index, best_report) = best.expect("non-empty geometry list");
    bench.set_reference_geometry(geometries[best_index].clone())?;
    Ok(ScreeningOutcome {
        evaluations,
        best_index,
        best_report,
    })
}
