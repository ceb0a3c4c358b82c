//! Reconstruction file formats, the external SfM contract and the
//! verify/restart state machine.

mod colmap;
mod epic;
mod pipeline;
mod state;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtering::FilterError;
use crate::geometry::{GeometryError, Reconstruction};

pub use colmap::{colmap_text, format_number, read_colmap_text, write_colmap_text, SIGNIFICANT_DIGITS};
pub use epic::{epic_from_value, epic_to_value, read_epic_fields_json, write_epic_fields_json};
pub use pipeline::{
    orchestrate, orchestrate_with, resolve_workdir, OrchestrateConfig, SfmBackend, StageContext, StageKind,
    SubprocessSfm, WorkdirLayout, WORKDIR_ENV,
};
pub use state::{PipelineState, Stage, StageRecord};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("cameras.txt line {line}: unknown camera model {model:?}")]
    UnknownModel { model: String, line: usize },
    #[error("dangling reference: {0}")]
    Dangling(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("cannot represent reconstruction: {0}")]
    Unrepresentable(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("{stage} failed with {status}; stderr:\n{stderr}")]
    Tool {
        stage: String,
        status: String,
        stderr: String,
    },
    #[error("{stage} exceeded its {seconds} s timeout")]
    Timeout { stage: String, seconds: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("illegal pipeline transition from {from} via {action}")]
    IllegalTransition { from: String, action: &'static str },
    #[error("corrupt pipeline state: {0}")]
    State(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReconError + '_ {
    move |source| ReconError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a sibling temporary file, syncs it and renames it over
/// `path`, so readers see either the old or the new contents.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ReconError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| ReconError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub accept_threshold: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { accept_threshold: 0.70 }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), ReconError> {
        if self.accept_threshold > 0.0 && self.accept_threshold <= 1.0 {
            Ok(())
        } else {
            Err(ReconError::Config(format!(
                "accept_threshold must lie in (0, 1], got {}",
                self.accept_threshold
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub accept: bool,
    pub registration_rate: f64,
    pub registered: usize,
    pub total: usize,
}

/// Registration rate `registered / total` and whether it reaches the
/// threshold (inclusive). A reconstruction with no frames at all is rejected.
pub fn verify(recon: &Reconstruction, config: &VerifyConfig) -> Verification {
    verify_counts(recon.frames.len(), recon.total_frame_count, config)
}

pub fn verify_counts(registered: usize, total: usize, config: &VerifyConfig) -> Verification {
    let registration_rate = if total == 0 {
        0.0
    } else {
        registered as f64 / total as f64
    };
    Verification {
        accept: total > 0 && registration_rate >= config.accept_threshold,
        registration_rate,
        registered,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_boundary_is_inclusive() {
        let cfg = VerifyConfig::default();
        assert!(verify_counts(70, 100, &cfg).accept);
        assert!(!verify_counts(69, 100, &cfg).accept);
        let full = verify_counts(100, 100, &cfg);
        assert!(full.accept);
        assert_eq!(full.registration_rate, 1.0);
        assert!(!verify_counts(0, 0, &cfg).accept);
    }

    #[test]
    fn verify_is_monotone_and_exact_for_all_totals() {
        let cfg = VerifyConfig::default();
        for total in 1..=1000usize {
            let mut prev = false;
            for reg in 0..=total {
                let v = verify_counts(reg, total, &cfg);
                assert!(!prev || v.accept);
                prev = v.accept;
                // Integer reference: reg / total >= 7 / 10.
                assert_eq!(v.accept, 10 * reg >= 7 * total, "{reg}/{total}");
            }
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
