//! Evaluation measures: PSNR with foreground/background splits, per-frame
//! average precision, region similarity J and boundary F.

mod ap;
mod psnr;
mod region;
mod report;

use thiserror::Error;

pub use ap::{average_precision, mean_average_precision, pooled_average_precision, video_mean, ApSummary, ScoreMap};
pub use psnr::{psnr, psnr_split, PsnrSplit, Raster};
pub use region::{
    boundary_f, boundary_map, default_boundary_tolerance, jaccard, jf_mean, BoundaryF, BOUNDARY_TOLERANCE_FRACTION,
};
pub use report::{MetricRecord, MetricReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("evaluation region is empty")]
    EmptyRegion,
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("cannot read {path}: {message}")]
    Image { path: String, message: String },
}

fn check_shape(what: &str, a: (usize, usize), b: (usize, usize)) -> Result<(), MetricError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )))
    }
}
