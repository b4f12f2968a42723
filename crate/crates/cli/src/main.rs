//! `gapro`: pseudo-label generation, evaluation and scene tooling.
//!
//! Reports go to stdout as JSON, logs to stderr. Exit codes: 0 success,
//! 2 bad arguments or configuration, 3 I/O or format errors, 4 numeric
//! failures.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapro_core::eval::{Interpolation, Primitive};
use gapro_core::labeler::LabelMode;
use gapro_core::partition::Granularity;
use gapro_core::Error;

#[derive(Parser, Debug)]
#[command(name = "gapro", version, about = "Box-supervised 3D instance pseudo labels")]
struct Cli {
    /// Worker threads for pair-level parallelism; defaults to all cores.
    #[arg(long, global = true, env = "GAPRO_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate pseudo labels for a scene.
    Generate(GenerateArgs),
    /// Score a label archive against ground truth.
    Eval(EvalArgs),
    /// Overlap multiplicity statistics of a scene.
    Stats(StatsArgs),
    /// Write a synthetic scene directory.
    Synth(SynthArgs),
    /// Degrade a box file with corner noise and/or random drops.
    Perturb(PerturbArgs),
    /// Re-run a `generate` invocation from its manifest.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    GpClassify,
    GpRegress,
    Ignore,
    SmallerBox,
    Linear,
}

impl From<ModeArg> for LabelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::GpClassify => LabelMode::GpClassify,
            ModeArg::GpRegress => LabelMode::GpRegress,
            ModeArg::Ignore => LabelMode::Ignore,
            ModeArg::SmallerBox => LabelMode::SmallerBox,
            ModeArg::Linear => LabelMode::Linear,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GranularityArg {
    Point,
    Superpoint,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Point => Granularity::Point,
            GranularityArg::Superpoint => Granularity::Superpoint,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PrimitiveArg {
    Cuboid,
    Ellipsoid,
}

impl From<PrimitiveArg> for Primitive {
    fn from(p: PrimitiveArg) -> Self {
        match p {
            PrimitiveArg::Cuboid => Primitive::Cuboid,
            PrimitiveArg::Ellipsoid => Primitive::Ellipsoid,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InterpolationArg {
    AllPoint,
    Points101,
}

impl From<InterpolationArg> for Interpolation {
    fn from(i: InterpolationArg) -> Self {
        match i {
            InterpolationArg::AllPoint => Interpolation::AllPoint,
            InterpolationArg::Points101 => Interpolation::Points101,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Point cloud (PLY).
    #[arg(long)]
    points: PathBuf,
    /// Box annotations (JSON).
    #[arg(long)]
    boxes: PathBuf,
    /// One superpoint id per point.
    #[arg(long)]
    superpoints: Option<PathBuf>,
    /// Per-point features replacing raw position and color.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gp-classify")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "superpoint")]
    granularity: GranularityArg,
    /// Initial RBF length scale.
    #[arg(long, default_value_t = 0.5)]
    length_scale: f64,
    /// Initial RBF output scale.
    #[arg(long, default_value_t = 1.0)]
    output_scale: f64,
    /// Keep the initial hyperparameters instead of fitting them per pair.
    #[arg(long)]
    fixed_params: bool,
    #[arg(long, default_value_t = gapro_core::gp::DEFAULT_ITERS)]
    opt_iters: usize,
    #[arg(long, default_value_t = gapro_core::gp::DEFAULT_LR)]
    lr: f64,
    /// Training regions kept per pair; 0 disables. Defaults to 800 at point
    /// granularity and no cap at superpoint granularity.
    #[arg(long)]
    point_cap: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output label archive.
    #[arg(long)]
    out: PathBuf,
    /// Write a run manifest (JSON).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Write a PLY colored by instance.
    #[arg(long)]
    export_ply: Option<PathBuf>,
    /// Write a PLY colored by label variance.
    #[arg(long)]
    export_variance_ply: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Label archive.
    #[arg(long)]
    labels: PathBuf,
    /// Ground truth: one `<instance> <class>` line per point, instance -1 for background.
    #[arg(long)]
    gt: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all-point")]
    interpolation: InterpolationArg,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    boxes: PathBuf,
    #[arg(long)]
    superpoints: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scene spec (JSON); flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    objects_min: Option<usize>,
    #[arg(long)]
    objects_max: Option<usize>,
    #[arg(long, value_enum)]
    primitive: Option<PrimitiveArg>,
    #[arg(long)]
    points_min: Option<usize>,
    #[arg(long)]
    points_max: Option<usize>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    separability: Option<f64>,
    #[arg(long)]
    background_points: Option<usize>,
    #[arg(long)]
    voxel_size: Option<f64>,
    /// Write the cloud as ASCII PLY instead of binary.
    #[arg(long)]
    ascii: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("degradation").required(true).multiple(true).args(["corner_noise", "drop_rate"]))]
struct PerturbArgs {
    #[arg(long)]
    boxes: PathBuf,
    /// Corner noise standard deviation in meters (or a fraction of the box extent with --fractional).
    #[arg(long)]
    corner_noise: Option<f64>,
    #[arg(long, requires = "corner_noise")]
    fractional: bool,
    /// Probability of removing each box; applied before corner noise.
    #[arg(long)]
    drop_rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Write the archive here instead of the manifest's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() || matches!(e, Error::Generation(_)) {
        2
    } else if e.is_numeric() {
        4
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let run = || match cli.command {
        Command::Generate(args) => commands::generate(args, cli.threads),
        Command::Eval(args) => commands::eval(args),
        Command::Stats(args) => commands::stats(args),
        Command::Synth(args) => commands::synth(args),
        Command::Perturb(args) => commands::perturb(args),
        Command::Replay(args) => commands::replay(args, cli.threads),
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::Config(format!("cannot build thread pool: {e}"))),
        },
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
