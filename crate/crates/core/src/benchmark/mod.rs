//! Benchmark split generation, UDOS mask variants, reconstruction
//! statistics and the filter-versus-uniform study.

mod split;
mod stats;
mod study;
mod udos;

use std::path::PathBuf;

use thiserror::Error;

pub use split::{
    generate_split, read_segments_csv, ActionSegment, Label, SplitAssignment, SplitConfig, SplitEntry,
    DEFAULT_OOA_EVAL_RATE,
};
pub use stats::{
    orientation_bin, reconstruction_stats, Histogram, OrientationHistogram, ReconStats, ReconSummary, ORIENTATION_BINS,
};
pub use study::{
    filtering_study_video, relative_change, SamplerSummary, ScriptedSfm, StudyOutcome, StudyRow, StudyTable,
};
pub use udos::{load_udos_annotations, udos_mask_variants, AnnotatedObject, UdosVariants};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Recon(#[from] crate::recon_io::ReconError),
    #[error(transparent)]
    Synthetic(#[from] crate::synthetic::SyntheticError),
    #[error(transparent)]
    Propagation(#[from] crate::propagation::PropagationError),
}
