//! Experiment configuration: a strict JSON schema validated in full
//! before any acquisition starts. Unknown keys are rejected.
//!
//! Key names, nested: `study`, `seed`, `out_dir`, then
//! `bench.{modes, channels, phase_levels, modulation, reference.{kind,
//! inner, outer, power, modes}, camera.{photons, read_sigma, bits}}`
//! and one study section (`tm`, `coherence`, `bilinear`).
//! `camera.photons` absent or null means a noiseless camera.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::bench::{
    CameraModel, GeometryKind, ModulationMode, ReferenceGeometry, ScatteringBench, SlmConfig,
};
use crate::error::{Error, Result};
use crate::tm::{InputBasis, MaskMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Tm,
    Coherence,
    Bilinear,
}

impl Study {
    pub fn label(&self) -> &'static str {
        match self {
            Study::Tm => "tm",
            Study::Coherence => "coherence",
            Study::Bilinear => "bilinear",
        }
    }
}

fn default_outer() -> f64 {
    1.0
}

fn default_power() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: GeometryKind,
    #[serde(default)]
    pub inner: f64,
    #[serde(default = "default_outer")]
    pub outer: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    /// Reference macro-pixels behind the medium (defaults to modes/4,
    /// at least 4).
    #[serde(default)]
    pub modes: Option<usize>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            kind: GeometryKind::Uniform,
            inner: 0.0,
            outer: 1.0,
            power: 0.5,
            modes: None,
        }
    }
}

impl ReferenceConfig {
    pub fn geometry(&self) -> Result<ReferenceGeometry> {
        match self.kind {
            GeometryKind::Uniform => ReferenceGeometry::uniform(self.power),
            GeometryKind::Annular => ReferenceGeometry::annular(self.inner, self.outer, self.power),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    /// Expected photons at unit intensity; absent/null = noiseless.
    #[serde(default)]
    pub photons: Option<f64>,
    #[serde(default)]
    pub read_sigma: f64,
    #[serde(default)]
    pub bits: u32,
}

impl CameraConfig {
    pub fn model(&self) -> Result<CameraModel> {
        let cam = CameraModel {
            photon_budget: self.photons.unwrap_or(f64::INFINITY),
            read_noise_sigma: self.read_sigma,
            bit_depth: self.bits,
            full_scale: 4.0,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn noiseless() -> Self {
        CameraConfig::default()
    }
}

fn default_phase_levels() -> u32 {
    1024
}

fn default_modulation() -> ModulationMode {
    ModulationMode::PhaseOnlyQuantized
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub modes: usize,
    pub channels: usize,
    #[serde(default = "default_phase_levels")]
    pub phase_levels: u32,
    #[serde(default = "default_modulation")]
    pub modulation: ModulationMode,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub camera: CameraConfig,
}

impl BenchSection {
    pub fn build(&self, seed: u64) -> Result<ScatteringBench> {
        let slm = SlmConfig::new(self.modes, self.phase_levels, self.modulation)?;
        let reference_modes = self.reference.modes.unwrap_or((self.modes / 4).max(4));
        ScatteringBench::new(
            slm,
            self.reference.geometry()?,
            self.camera.model()?,
            self.channels,
            reference_modes,
            seed,
        )
    }
}

fn default_basis() -> InputBasis {
    InputBasis::Hadamard
}

fn default_mask_mode() -> MaskMode {
    MaskMode::PhaseOnly
}

fn default_scaling_modes() -> Vec<usize> {
    vec![16, 64, 256]
}

fn default_scaling_seeds() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmSection {
    #[serde(default = "default_basis")]
    pub basis: InputBasis,
    #[serde(default)]
    pub target: usize,
    #[serde(default = "default_mask_mode")]
    pub mask: MaskMode,
    #[serde(default = "default_scaling_modes")]
    pub scaling_modes: Vec<usize>,
    #[serde(default = "default_scaling_seeds")]
    pub scaling_seeds: usize,
    /// Candidate reference geometries; empty disables screening.
    #[serde(default)]
    pub geometries: Vec<ReferenceConfig>,
}

impl Default for TmSection {
    fn default() -> Self {
        TmSection {
            basis: default_basis(),
            target: 0,
            mask: default_mask_mode(),
            scaling_modes: default_scaling_modes(),
            scaling_seeds: default_scaling_seeds(),
            geometries: Vec::new(),
        }
    }
}

fn default_masks() -> usize {
    4
}

fn default_comparable_pairs() -> usize {
    40
}

fn default_chain_steps() -> usize {
    6
}

fn default_samples() -> usize {
    500
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSection {
    /// Readout bins over the camera channels.
    #[serde(default = "default_masks")]
    pub masks: usize,
    /// Comparable pairs generated by T-transform chains.
    #[serde(default = "default_comparable_pairs")]
    pub comparable_pairs: usize,
    #[serde(default = "default_chain_steps")]
    pub chain_steps: usize,
    /// Haar samples per (pair, operator) in the sampling cross-check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Optional CSV of extra spectra pairs: two lines per pair, one
    /// spectrum per line.
    #[serde(default)]
    pub pairs_file: Option<String>,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        CoherenceSection {
            masks: default_masks(),
            comparable_pairs: default_comparable_pairs(),
            chain_steps: default_chain_steps(),
            samples: default_samples(),
            pairs_file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BilinearTask {
    Xor,
    Semantic,
}

fn default_shots() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSection {
    pub task: BilinearTask,
    #[serde(default = "default_shots")]
    pub shots: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: Study,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    pub bench: BenchSection,
    #[serde(default)]
    pub tm: Option<TmSection>,
    #[serde(default)]
    pub coherence: Option<CoherenceSection>,
    #[serde(default)]
    pub bilinear: Option<BilinearSection>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_json(&text)
    }

    /// Full validation before any acquisition.
    pub fn validate(&self) -> Result<()> {
        if self.bench.modes == 0 || self.bench.channels == 0 {
            return Err(Error::Config("bench.modes and bench.channels must be >= 1".into()));
        }
        if self.bench.phase_levels < 2 {
            return Err(Error::Config("bench.phase_levels must be >= 2".into()));
        }
        self.bench
            .reference
            .geometry()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.bench
            .camera
            .model()
            .map_err(|e| Error::Config(e.to_string()))?;
        match self.study {
            Study::Tm => {
                let section = self.tm.clone().unwrap_or_default();
                if section.target >= self.bench.channels {
                    return Err(Error::Config(format!(
                        "tm.target {} out of range for {} channels",
                        section.target, self.bench.channels
                    )));
                }
                if section.basis == InputBasis::Hadamard && !self.bench.modes.is_power_of_two() {
                    return Err(Error::Config(
                        "hadamard basis needs a power-of-two mode count".into(),
                    ));
                }
                for g in &section.geometries {
                    g.geometry().map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            Study::Coherence => {
                let section = self.coherence.clone().unwrap_or_default();
                if section.masks == 0 || section.masks > self.bench.channels {
                    return Err(Error::Config(format!(
                        "coherence.masks must be in 1..={}",
                        self.bench.channels
                    )));
                }
                if self.bench.modes > 16 {
                    return Err(Error::Config(
                        "coherence study uses at most 16 input ports".into(),
                    ));
                }
                if section.samples == 0 {
                    return Err(Error::Config("coherence.samples must be >= 1".into()));
                }
            }
            Study::Bilinear => {
                let section = self
                    .bilinear
                    .as_ref()
                    .ok_or_else(|| Error::Config("bilinear study needs a bilinear section".into()))?;
                if section.shots < 2 {
                    return Err(Error::Config(
                        "bilinear.shots must be >= 2 (shot-parity split)".into(),
                    ));
                }
                let tokens = match section.task {
                    BilinearTask::Xor => 4,
                    BilinearTask::Semantic => 8,
                };
                if self.bench.modes < tokens {
                    return Err(Error::Config(format!(
                        "bilinear task needs bench.modes >= {tokens}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_bench(&self) -> Result<ScatteringBench> {
        self.bench.build(self.seed)
    }

    /// Force the camera noiseless (the `--noiseless` CLI flag).
    pub fn make_noiseless(&mut self) {
        self.bench.camera = CameraConfig::noiseless();
    }
}
