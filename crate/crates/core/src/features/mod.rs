//! Keypoints, descriptors and descriptor matching.
//!
//! [`Sift`] is the reference detector. Anything implementing [`Detector`]
//! can stand in for it, and [`read_feature_file`] ingests features computed
//! elsewhere.

mod image;
mod io;
mod matching;
mod sift;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::image::GrayImage;
pub use io::{read_feature_file, write_feature_file};
pub use matching::{match_features, Match, MatchConfig, MatchSet, DEFAULT_RATIO};
pub use sift::{detect_and_describe, Sift, SiftConfig, DESCRIPTOR_DIM};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot read image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("image is {width}x{height}; at least 32x32 is required")]
    ImageTooSmall { width: usize, height: usize },
    #[error("malformed feature file {path}: {message}")]
    MalformedFile { path: PathBuf, message: String },
    #[error("invalid feature set: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A detected keypoint, in pixel-centre coordinates of the input image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Detection scale (Gaussian sigma) in pixels.
    pub scale: f32,
    /// Radians.
    pub orientation: f32,
    /// Detector response; not persisted in feature files.
    #[serde(default)]
    pub response: f32,
}

/// Keypoints with one unit-norm descriptor each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    keypoints: Vec<Keypoint>,
    descriptors: Vec<f32>,
    dim: usize,
}

impl FeatureSet {
    pub fn empty(dim: usize) -> Self {
        FeatureSet {
            keypoints: Vec::new(),
            descriptors: Vec::new(),
            dim,
        }
    }

    /// Checks that the descriptor matrix matches the keypoints and that every
    /// row has unit norm within 1e-6.
    pub fn from_parts(keypoints: Vec<Keypoint>, descriptors: Vec<f32>, dim: usize) -> Result<Self, FeatureError> {
        if descriptors.len() != keypoints.len() * dim {
            return Err(FeatureError::Invalid(format!(
                "{} descriptor values for {} keypoints of dimension {dim}",
                descriptors.len(),
                keypoints.len()
            )));
        }
        if dim > 0 {
            for (i, row) in descriptors.chunks(dim).enumerate() {
                let norm = row.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(FeatureError::Invalid(format!("descriptor {i} has norm {norm}")));
                }
            }
        }
        Ok(FeatureSet {
            keypoints,
            descriptors,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keypoints(&self) -> &[Keypoint] {
        &self.keypoints
    }

    pub fn descriptor(&self, i: usize) -> &[f32] {
        &self.descriptors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn descriptors(&self) -> &[f32] {
        &self.descriptors
    }
}

/// Produces a [`FeatureSet`] from an image.
pub trait Detector: Send + Sync {
    fn detect(&self, image: &GrayImage) -> FeatureSet;
}

/// Checks the minimum size and runs `detector`.
pub fn extract(detector: &dyn Detector, image: &GrayImage) -> Result<FeatureSet, FeatureError> {
    if image.width() < 32 || image.height() < 32 {
        return Err(FeatureError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(detector.detect(image))
}
