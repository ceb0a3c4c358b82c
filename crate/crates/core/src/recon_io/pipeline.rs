//! Filter, sparse SfM, dense registration and verification, with state
//! persisted after every stage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{atomic_write, io_err, read_colmap_text, verify, PipelineState, ReconError, Stage, VerifyConfig};
use crate::filtering::{filter_frames, FilterConfig, FilterResult, FrameSource};
use crate::geometry::{CameraModel, Reconstruction};

/// Environment variable that overrides the configured working directory.
pub const WORKDIR_ENV: &str = "EGOFIELDS_WORKDIR";

pub fn resolve_workdir(configured: &Path) -> PathBuf {
    match std::env::var_os(WORKDIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    /// Sparse reconstruction from the kept frames.
    Sparse,
    /// Registration of every frame against the sparse model.
    Register,
}

impl StageKind {
    pub fn name(self) -> &'static str {
        match self {
            StageKind::Sparse => "sparse",
            StageKind::Register => "register",
        }
    }
}

/// Everything an external tool needs for one stage.
#[derive(Debug, Clone)]
pub struct StageContext {
    pub kind: StageKind,
    pub attempt: u32,
    pub image_dir: PathBuf,
    /// Frame names relative to `image_dir`, one per line: the kept frames
    /// for [`StageKind::Sparse`], all frames for [`StageKind::Register`].
    pub image_list: PathBuf,
    /// Where the stage must leave a COLMAP text model.
    pub output_dir: PathBuf,
    /// The sparse model; equal to `output_dir` for the sparse stage.
    pub sparse_dir: PathBuf,
    pub camera_model: CameraModel,
    pub log_dir: PathBuf,
}

/// An SfM implementation driven through the file contract above.
pub trait SfmBackend: Sync {
    fn run(&self, ctx: &StageContext) -> Result<(), ReconError>;
}

/// Runs external commands built from templates. Tokens may contain the
/// placeholders `{image_dir}`, `{image_list}`, `{output_dir}`, `{sparse_dir}`
/// and `{camera_model}`; substitution happens after shell-style splitting, so
/// paths with spaces stay single arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubprocessSfm {
    pub sfm_cmd: String,
    pub register_cmd: String,
    /// Per-stage limit; `None` waits indefinitely.
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

impl SubprocessSfm {
    /// Loads the templates from a TOML file, or JSON when the extension is
    /// `.json`.
    pub fn from_file(path: &Path) -> Result<Self, ReconError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| ReconError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| ReconError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn command_line(&self, ctx: &StageContext) -> Result<Vec<String>, ReconError> {
        let template = match ctx.kind {
            StageKind::Sparse => &self.sfm_cmd,
            StageKind::Register => &self.register_cmd,
        };
        let tokens = shlex::split(template).filter(|t| !t.is_empty()).ok_or_else(|| {
            ReconError::Config(format!(
                "cannot parse {} command template {template:?}",
                ctx.kind.name()
            ))
        })?;
        let subs = [
            ("{image_dir}", ctx.image_dir.to_string_lossy().into_owned()),
            ("{image_list}", ctx.image_list.to_string_lossy().into_owned()),
            ("{output_dir}", ctx.output_dir.to_string_lossy().into_owned()),
            ("{sparse_dir}", ctx.sparse_dir.to_string_lossy().into_owned()),
            ("{camera_model}", ctx.camera_model.colmap_name().to_string()),
        ];
        Ok(tokens
            .into_iter()
            .map(|mut t| {
                for (k, v) in &subs {
                    t = t.replace(k, v);
                }
                t
            })
            .collect())
    }
}

fn tail(text: &str, max_bytes: usize) -> &str {
    if text.len() <= max_bytes {
        return text;
    }
    let mut start = text.len() - max_bytes;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    &text[start..]
}

impl SfmBackend for SubprocessSfm {
    fn run(&self, ctx: &StageContext) -> Result<(), ReconError> {
        let argv = self.command_line(ctx)?;
        let stage = format!("{} (attempt {})", ctx.kind.name(), ctx.attempt);
        let base = ctx.log_dir.join(format!("attempt_{}_{}", ctx.attempt, ctx.kind.name()));
        let out_path = base.with_extension("stdout.log");
        let err_path = base.with_extension("stderr.log");
        let stdout = fs::File::create(&out_path).map_err(io_err(&out_path))?;
        let stderr = fs::File::create(&err_path).map_err(io_err(&err_path))?;
        info!("running {stage}: {argv:?}");
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(stdout)
            .stderr(stderr)
            .spawn()
            .map_err(|e| ReconError::Tool {
                stage: stage.clone(),
                status: "spawn failure".into(),
                stderr: format!("{}: {e}", argv[0]),
            })?;
        let status = match self.timeout_secs {
            Some(seconds) => match child
                .wait_timeout(Duration::from_secs(seconds))
                .map_err(io_err(&err_path))?
            {
                Some(s) => s,
                None => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ReconError::Timeout { stage, seconds });
                }
            },
            None => child.wait().map_err(io_err(&err_path))?,
        };
        if !status.success() {
            let text = fs::read_to_string(&err_path).unwrap_or_default();
            return Err(ReconError::Tool {
                stage,
                status: status.to_string(),
                stderr: tail(&text, 8192).to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestrateConfig {
    pub filter: FilterConfig,
    pub verify: VerifyConfig,
    pub camera_model: CameraModel,
    pub workdir: PathBuf,
}

impl Default for OrchestrateConfig {
    fn default() -> Self {
        OrchestrateConfig {
            filter: FilterConfig::default(),
            verify: VerifyConfig::default(),
            camera_model: CameraModel::SimpleRadial,
            workdir: PathBuf::from("work"),
        }
    }
}

/// Files of one orchestration run.
#[derive(Debug, Clone)]
pub struct WorkdirLayout {
    pub root: PathBuf,
}

impl WorkdirLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WorkdirLayout { root: root.into() }
    }

    pub fn state(&self) -> PathBuf {
        self.root.join("state.json")
    }

    pub fn logs(&self) -> PathBuf {
        self.root.join("logs")
    }

    pub fn all_frames(&self) -> PathBuf {
        self.root.join("all_frames.txt")
    }

    pub fn attempt(&self, attempt: u32) -> PathBuf {
        self.root.join(format!("attempt_{attempt}"))
    }

    pub fn filter_result(&self, attempt: u32) -> PathBuf {
        self.attempt(attempt).join("filter.json")
    }

    pub fn kept_frames(&self, attempt: u32) -> PathBuf {
        self.attempt(attempt).join("kept_frames.txt")
    }

    pub fn sparse(&self, attempt: u32) -> PathBuf {
        self.attempt(attempt).join("sparse")
    }

    pub fn dense(&self, attempt: u32) -> PathBuf {
        self.attempt(attempt).join("dense")
    }

    pub fn load_state(&self) -> Result<Option<PipelineState>, ReconError> {
        let path = self.state();
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| ReconError::State(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn save_state(&self, state: &PipelineState) -> Result<(), ReconError> {
        let text = serde_json::to_string_pretty(state).expect("state serialises");
        atomic_write(&self.state(), text.as_bytes())
    }
}

fn create_dir(path: &Path) -> Result<(), ReconError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn write_names(path: &Path, names: impl Iterator<Item = String>) -> Result<(), ReconError> {
    let mut text = String::new();
    for n in names {
        text.push_str(&n);
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Runs the pipeline with the homography filter.
pub fn orchestrate(
    frames: &dyn FrameSource,
    image_dir: &Path,
    backend: &dyn SfmBackend,
    config: &OrchestrateConfig,
) -> Result<(PipelineState, Reconstruction), ReconError> {
    orchestrate_with(frames, image_dir, backend, config, &mut |_, cfg| {
        filter_frames(frames, cfg).map_err(ReconError::from)
    })
}

/// Runs the pipeline with a caller-supplied frame selector, which receives
/// the attempt number and the filter configuration for that attempt.
///
/// Existing state in the working directory is resumed: completed stages are
/// not repeated and a finished run only reloads its final model. The
/// returned reconstruction is the dense model of the last attempt, with
/// `total_frame_count` set to the number of input frames.
pub fn orchestrate_with(
    frames: &dyn FrameSource,
    image_dir: &Path,
    backend: &dyn SfmBackend,
    config: &OrchestrateConfig,
    select: &mut dyn FnMut(u32, &FilterConfig) -> Result<FilterResult, ReconError>,
) -> Result<(PipelineState, Reconstruction), ReconError> {
    config.filter.validate()?;
    config.verify.validate()?;
    let layout = WorkdirLayout::new(&config.workdir);
    create_dir(&layout.logs())?;
    let mut state = layout.load_state()?.unwrap_or_default();
    write_names(&layout.all_frames(), (0..frames.len()).map(|i| frames.name(i)))?;
    let restart = config.filter.for_attempt(2).overlap_threshold;

    loop {
        let attempt = state.attempt.max(1);
        let context = |kind: StageKind| StageContext {
            kind,
            attempt,
            image_dir: image_dir.to_path_buf(),
            image_list: match kind {
                StageKind::Sparse => layout.kept_frames(attempt),
                StageKind::Register => layout.all_frames(),
            },
            output_dir: match kind {
                StageKind::Sparse => layout.sparse(attempt),
                StageKind::Register => layout.dense(attempt),
            },
            sparse_dir: layout.sparse(attempt),
            camera_model: config.camera_model,
            log_dir: layout.logs(),
        };
        match state.stage {
            Stage::Pending => {
                let cfg = config.filter.for_attempt(1);
                ensure_filtered(&layout, frames, 1, &cfg, select)?;
                state.filtered(cfg.overlap_threshold)?;
            }
            Stage::Filtered { .. } | Stage::Refiltered { .. } => {
                ensure_filtered(&layout, frames, attempt, &config.filter.for_attempt(attempt), select)?;
                let ctx = context(StageKind::Sparse);
                create_dir(&ctx.output_dir)?;
                backend.run(&ctx)?;
                state.sparse_done()?;
            }
            Stage::SparseDone => {
                let ctx = context(StageKind::Register);
                create_dir(&ctx.output_dir)?;
                backend.run(&ctx)?;
                state.dense_done()?;
            }
            Stage::DenseDone => {
                let recon = load_dense(&layout, attempt, frames)?;
                let outcome = verify(&recon, &config.verify);
                info!(
                    "attempt {attempt}: {}/{} frames registered ({:.3})",
                    outcome.registered, outcome.total, outcome.registration_rate
                );
                state.verified(&outcome, restart)?;
            }
            Stage::Accepted | Stage::Rejected => {
                let recon = load_dense(&layout, attempt, frames)?;
                return Ok((state, recon));
            }
        }
        layout.save_state(&state)?;
    }
}

fn ensure_filtered(
    layout: &WorkdirLayout,
    frames: &dyn FrameSource,
    attempt: u32,
    cfg: &FilterConfig,
    select: &mut dyn FnMut(u32, &FilterConfig) -> Result<FilterResult, ReconError>,
) -> Result<(), ReconError> {
    let path = layout.filter_result(attempt);
    if path.exists() && layout.kept_frames(attempt).exists() {
        return Ok(());
    }
    create_dir(&layout.attempt(attempt))?;
    let result = select(attempt, cfg)?;
    if let Some(&bad) = result.kept.iter().find(|&&k| k >= frames.len()) {
        return Err(ReconError::Config(format!(
            "selector kept frame {bad} of {}",
            frames.len()
        )));
    }
    info!(
        "attempt {attempt}: kept {} of {} frames at threshold {}",
        result.kept.len(),
        frames.len(),
        cfg.overlap_threshold
    );
    let text = serde_json::to_string_pretty(&result).expect("filter result serialises");
    atomic_write(&path, text.as_bytes())?;
    write_names(
        &layout.kept_frames(attempt),
        result.kept.iter().map(|&k| frames.name(k)),
    )
}

fn load_dense(layout: &WorkdirLayout, attempt: u32, frames: &dyn FrameSource) -> Result<Reconstruction, ReconError> {
    let mut recon = read_colmap_text(&layout.dense(attempt))?;
    let known: std::collections::HashSet<String> = (0..frames.len()).map(|i| frames.name(i)).collect();
    for f in &recon.frames {
        if !known.contains(&f.name) {
            warn!("registered frame {:?} is not part of the input", f.name);
            return Err(ReconError::Dangling(format!(
                "registered frame {:?} is not an input frame",
                f.name
            )));
        }
    }
    recon.total_frame_count = frames.len();
    Ok(recon)
}
