//! Command-line runner for the virtual scattering bench.
//!
//! One subcommand per study (`tm`, `coherence`, `bilinear`) plus
//! `replay` for auditing a finished run. Studies can start from a JSON
//! config (`--config`) with flags layered on top, or from built-in desk
//! scale defaults. The default output root comes from `SCATTERBENCH_OUT`
//! (falling back to `./runs`).

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

use scatterbench::bench::GeometryKind;
use scatterbench::config::{
    BenchSection, BilinearSection, BilinearTask, CameraConfig, CoherenceSection, ExperimentConfig,
    ReferenceConfig, Study, TmSection,
};
use scatterbench::runner::{replay, run_experiment};
use scatterbench::tm::InputBasis;

#[derive(Parser)]
#[command(name = "scatterbench", version, about = "Virtual self-referenced scattering-optics bench")]
struct Cli {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory (overrides config and SCATTERBENCH_OUT).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Force a noiseless camera.
    #[arg(long, global = true)]
    noiseless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission-matrix measurement, focusing, mode scaling and
    /// reference-geometry screening.
    Tm(TmArgs),
    /// Majorization coherence-order transport intervals.
    Coherence(CoherenceArgs),
    /// Optical bilinear pair features and classification benchmarks.
    Bilinear(BilinearArgs),
    /// Validate a run's trace ledger and list its artifact inventory.
    Replay { run_dir: PathBuf },
}

#[derive(Args)]
struct TmArgs {
    /// Controlled input modes N.
    #[arg(long)]
    modes: Option<usize>,
    /// Camera channels M.
    #[arg(long)]
    channels: Option<usize>,
    /// Input basis: hadamard | canonical.
    #[arg(long)]
    basis: Option<String>,
    /// Focus target channel.
    #[arg(long)]
    target: Option<usize>,
    /// Candidate reference geometry, repeatable:
    /// "uniform:POWER" or "annular:INNER:OUTER:POWER".
    #[arg(long = "geometry")]
    geometries: Vec<String>,
}

#[derive(Args)]
struct CoherenceArgs {
    /// Input ports (<= 16).
    #[arg(long)]
    ports: Option<usize>,
    /// Readout bins over the camera channels.
    #[arg(long)]
    masks: Option<usize>,
    /// CSV of extra spectra (two lines per pair).
    #[arg(long)]
    pairs_file: Option<PathBuf>,
    /// Haar samples per (pair, operator).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct BilinearArgs {
    /// xor | semantic.
    #[arg(long)]
    task: Option<String>,
    /// Camera channels M.
    #[arg(long)]
    channels: Option<usize>,
    /// Shots per ordered pair.
    #[arg(long)]
    shots: Option<usize>,
    /// Poisson photon budget (omit for noiseless).
    #[arg(long)]
    photons: Option<f64>,
}

fn parse_geometry(text: &str) -> anyhow::Result<ReferenceConfig> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["uniform", power] => Ok(ReferenceConfig {
            kind: GeometryKind::Uniform,
            inner: 0.0,
            outer: 1.0,
            power: power.parse()?,
            modes: None,
        }),
        ["annular", inner, outer, power] => Ok(ReferenceConfig {
            kind: GeometryKind::Annular,
            inner: inner.parse()?,
            outer: outer.parse()?,
            power: power.parse()?,
            modes: None,
        }),
        _ => bail!("geometry must be 'uniform:POWER' or 'annular:INNER:OUTER:POWER', got {text}"),
    }
}

fn parse_basis(text: &str) -> anyhow::Result<InputBasis> {
    match text {
        "hadamard" => Ok(InputBasis::Hadamard),
        "canonical" => Ok(InputBasis::Canonical),
        other => bail!("basis must be 'hadamard' or 'canonical', got {other}"),
    }
}

fn base_config(cli: &Cli, study: Study) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &cli.config {
        let config = ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?;
        if config.study != study {
            bail!(
                "config is for study '{}', but the '{}' subcommand was invoked",
                config.study.label(),
                study.label()
            );
        }
        return Ok(config);
    }
    // Desk-scale defaults per study.
    let (modes, channels) = match study {
        Study::Tm => (64, 256),
        Study::Coherence => (16, 64),
        Study::Bilinear => (64, 256),
    };
    Ok(ExperimentConfig {
        study,
        seed: 7,
        out_dir: None,
        bench: BenchSection {
            modes,
            channels,
            phase_levels: 1024,
            modulation: match study {
                Study::Tm => scatterbench::bench::ModulationMode::PhaseOnlyQuantized,
                _ => scatterbench::bench::ModulationMode::IdealComplex,
            },
            reference: ReferenceConfig::default(),
            camera: CameraConfig::noiseless(),
        },
        tm: (study == Study::Tm).then(TmSection::default),
        coherence: (study == Study::Coherence).then(CoherenceSection::default),
        bilinear: (study == Study::Bilinear).then_some(BilinearSection {
            task: BilinearTask::Semantic,
            shots: 8,
        }),
    })
}

fn resolve_out_dir(cli: &Cli, config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cli.out_dir {
        return dir.clone();
    }
    if let Some(dir) = &config.out_dir {
        return PathBuf::from(dir);
    }
    let root = std::env::var("SCATTERBENCH_OUT").unwrap_or_else(|_| "runs".to_owned());
    PathBuf::from(root).join(format!("{}-seed{}", config.study.label(), config.seed))
}

fn finish(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<()> {
    let summary = run_experiment(config, out_dir)?;
    println!(
        "{} run complete: {} ({} artifacts)",
        summary.study.label(),
        summary.out_dir.display(),
        summary.artifacts.len()
    );
    let metrics_path = summary.out_dir.join("metrics.json");
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(metrics_path)?)?;
    match summary.study {
        Study::Tm => {
            println!(
                "  frames_used = {}, enhancement (complex) = {}, (configured) = {}",
                metrics["frames_used"],
                metrics["enhancement_complex"],
                metrics["enhancement_configured"]
            );
        }
        Study::Coherence => {
            println!(
                "  pairs = {}, nested_for_all = {}, overlap_witnessed = {}, max_sample_excess = {}",
                metrics["pairs"],
                metrics["nested_for_all"],
                metrics["overlap_witnessed"],
                metrics["max_sample_excess"]
            );
        }
        Study::Bilinear => {
            println!("  accuracies:");
            for entry in metrics["accuracies"].as_array().into_iter().flatten() {
                println!(
                    "    {:<16} {:<20} {}",
                    entry["task"].as_str().unwrap_or(""),
                    entry["representation"].as_str().unwrap_or(""),
                    entry["accuracy"]
                );
            }
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Tm(args) => {
            let mut config = base_config(&cli, Study::Tm)?;
            let mut section = config.tm.clone().unwrap_or_default();
            if let Some(modes) = args.modes {
                config.bench.modes = modes;
            }
            if let Some(channels) = args.channels {
                config.bench.channels = channels;
            }
            if let Some(basis) = &args.basis {
                section.basis = parse_basis(basis)?;
            }
            if let Some(target) = args.target {
                section.target = target;
            }
            if !args.geometries.is_empty() {
                section.geometries = args
                    .geometries
                    .iter()
                    .map(|g| parse_geometry(g))
                    .collect::<anyhow::Result<Vec<_>>>()?;
            }
            config.tm = Some(section);
            apply_globals(&cli, &mut config);
            let out_dir = resolve_out_dir(&cli, &config);
            finish(&config, &out_dir)
        }
        Command::Coherence(args) => {
            let mut config = base_config(&cli, Study::Coherence)?;
            let mut section = config.coherence.clone().unwrap_or_default();
            if let Some(ports) = args.ports {
                config.bench.modes = ports;
            }
            if let Some(masks) = args.masks {
                section.masks = masks;
            }
            if let Some(samples) = args.samples {
                section.samples = samples;
            }
            if let Some(file) = &args.pairs_file {
                section.pairs_file = Some(file.display().to_string());
            }
            config.coherence = Some(section);
            apply_globals(&cli, &mut config);
            let out_dir = resolve_out_dir(&cli, &config);
            finish(&config, &out_dir)
        }
        Command::Bilinear(args) => {
            let mut config = base_config(&cli, Study::Bilinear)?;
            let mut section = config.bilinear.clone().unwrap_or(BilinearSection {
                task: BilinearTask::Semantic,
                shots: 8,
            });
            if let Some(task) = &args.task {
                section.task = match task.as_str() {
                    "xor" => BilinearTask::Xor,
                    "semantic" => BilinearTask::Semantic,
                    other => bail!("task must be 'xor' or 'semantic', got {other}"),
                };
            }
            if let Some(channels) = args.channels {
                config.bench.channels = channels;
            }
            if let Some(shots) = args.shots {
                section.shots = shots;
            }
            if let Some(photons) = args.photons {
                config.bench.camera.photons = Some(photons);
            }
            config.bilinear = Some(section);
            apply_globals(&cli, &mut config);
            let out_dir = resolve_out_dir(&cli, &config);
            finish(&config, &out_dir)
        }
        Command::Replay { run_dir } => {
            let summary = replay(run_dir)?;
            // Inventories can be long; stay quiet if the pipe closes.
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let mut emit = move || -> std::io::Result<()> {
                writeln!(
                    out,
                    "ledger valid: {} records{}",
                    summary.records,
                    summary
                        .study
                        .map(|s| format!(" ({} study)", s.label()))
                        .unwrap_or_default()
                )?;
                writeln!(out, "artifact inventory:")?;
                for path in &summary.inventory {
                    writeln!(out, "  {path}")?;
                }
                Ok(())
            };
            match emit() {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.map_err(Into::into),
            }
        }
    }
}

fn apply_globals(cli: &Cli, config: &mut ExperimentConfig) {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.noiseless {
        config.make_noiseless();
    }
}
