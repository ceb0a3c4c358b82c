//! `egofields` command-line tool.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{parse_camera_model, Config};
use egofields::geometry::CameraModel;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "egofields",
    version,
    about = "Frame filtering, reconstruction bookkeeping and benchmark tooling for egocentric video"
)]
pub struct Cli {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomised component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select frames with the overlap filter.
    Filter(FilterArgs),
    /// Filter, reconstruct, register and verify one video with an external SfM tool.
    Reconstruct(ReconstructArgs),
    /// Compute the registration rate of a model and the accept decision.
    Verify(VerifyArgs),
    /// Convert between a COLMAP text model directory and an EPIC JSON file.
    Convert(ConvertArgs),
    /// Propagate a reference mask to every registered frame.
    Propagate(PropagateArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Assign train/val/test labels with difficulty tiers.
    Split(SplitArgs),
    /// Registration, error, size and orientation statistics of models.
    Stats(StatsArgs),
    /// Compare the overlap filter with uniform sampling on synthetic videos.
    StudyFiltering(StudyArgs),
    /// Render a synthetic preset to disk.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Directory of frames, or a manifest file listing `path[,timestamp]` lines.
    pub frames: PathBuf,
    /// Kept frame names, one per line.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Full filter result (windows and pair log) as JSON.
    #[arg(long)]
    pub result: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_matches: Option<usize>,
    #[arg(long)]
    pub max_window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Leave unreadable frames out instead of failing.
    #[arg(long)]
    pub skip_unreadable: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Directory of frames.
    pub frames: PathBuf,
    /// Working directory (default from config; EGOFIELDS_WORKDIR overrides both).
    #[arg(long)]
    pub workdir: Option<PathBuf>,
    /// Sparse-stage command template.
    #[arg(long, env = "EGOFIELDS_SFM_CMD")]
    pub sfm_cmd: Option<String>,
    /// Registration-stage command template (default: the sparse template).
    #[arg(long)]
    pub register_cmd: Option<String>,
    /// Per-stage timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub accept_threshold: Option<f64>,
    #[arg(long, value_parser = parse_camera_model)]
    pub camera_model: Option<CameraModel>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// COLMAP text model directory or EPIC JSON file.
    pub model: PathBuf,
    /// Frames in the video (default: the count stored with the model).
    #[arg(long)]
    pub total: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// COLMAP text directory or `.json` file.
    pub input: PathBuf,
    /// `.json` file or directory; the direction follows the input.
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropagateMode {
    Fixed2d,
    Fixed3d,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(value_enum)]
    pub mode: PropagateMode,
    /// Model with the registered frames.
    #[arg(long)]
    pub model: PathBuf,
    /// Name of the frame the mask belongs to.
    #[arg(long)]
    pub reference: String,
    /// Reference mask raster (nonzero is foreground).
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Directory with the frames; when given, overlay images are written too.
    #[arg(long)]
    pub overlays: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub object_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalTask {
    Nvs,
    Udos,
    Vos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UdosVariant {
    A,
    B,
    C,
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(value_enum)]
    pub task: EvalTask,
    /// Predictions: images (nvs), score maps (udos) or masks (vos).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth: images or masks directory, or the UDOS annotation file.
    #[arg(long)]
    pub gt: PathBuf,
    /// nvs: dynamic-object masks splitting PSNR into foreground and background.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// nvs: split CSV; evaluation frames are grouped by label.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UdosVariant::All)]
    pub variant: UdosVariant,
    /// vos: frames to leave out, e.g. the reference frame.
    #[arg(long)]
    pub exclude: Vec<String>,
    /// vos: boundary tolerance in pixels (default from the image size).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value = "method")]
    pub method: String,
    /// Directory for `summary.json` and `per_frame.csv`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Model with the registered frames.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of `video_id,start_sec,stop_sec,verb`.
    #[arg(long)]
    pub segments: PathBuf,
    /// File listing frames with mask ground truth, one per line.
    #[arg(long)]
    pub visor_frames: Option<PathBuf>,
    /// Frame rate for timestamps derived from frame numbers.
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub ooa_eval_rate: Option<f64>,
    #[arg(long)]
    pub easy_fraction: Option<f64>,
    #[arg(long)]
    pub exclusion_window: Option<f64>,
    /// Output CSV of `frame_name,label`.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Models, one per video.
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Number of skewed-trajectory videos, seeded from `--seed` upwards.
    #[arg(long, default_value_t = 10)]
    pub videos: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Identical,
    AbruptCut,
    Panning,
    HotSpot,
    Skewed,
    VosStatic,
    VosLeaving,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub preset: PresetName,
    /// Frame count for presets that take one.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    commands::apply_flags(&cli.command, &mut config)?;
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::new("config", e.to_string()))?;
    }
    commands::dispatch(&cli.command, &config, cli.seed.unwrap_or(0))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
