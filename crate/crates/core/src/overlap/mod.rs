//! Robust homographies between frame pairs and the visual-overlap score.

mod area;
mod homography;
mod ransac;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{match_features, FeatureSet, MatchConfig};

pub use area::{clip_to_rect, polygon_area, symmetric_overlap, visual_overlap};
pub use homography::{dlt_solve, Homography, MIN_DETERMINANT};
pub use ransac::{estimate_homography, ransac_homography, HomographyFit, RansacConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlapError {
    #[error("insufficient matches: {found} (need at least {required})")]
    InsufficientMatches { found: usize, required: usize },
    #[error("degenerate homography: {0}")]
    Degenerate(String),
    #[error("no model with at least 4 inliers")]
    NoConsensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OverlapScore {
    pub r_tilde: f64,
    pub inlier_count: usize,
    pub matched_count: usize,
}

/// Everything needed to score one frame pair from its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairConfig {
    pub matching: MatchConfig,
    pub ransac: RansacConfig,
    /// Fewer ratio-test matches than this scores as zero overlap.
    pub min_matches: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            matching: MatchConfig::default(),
            ransac: RansacConfig::default(),
            min_matches: 20,
        }
    }
}

/// Matches `a` against `b`, fits a homography and returns the symmetric
/// overlap. Any failure along the way yields `r_tilde = 0`.
pub fn pair_overlap(a: &FeatureSet, b: &FeatureSet, width: f64, height: f64, config: &PairConfig) -> OverlapScore {
    let matches = match_features(a, b, &config.matching);
    let mut score = OverlapScore {
        matched_count: matches.len(),
        ..Default::default()
    };
    if matches.len() < config.min_matches.max(4) {
        return score;
    }
    match estimate_homography(&matches, a.keypoints(), b.keypoints(), &config.ransac) {
        Ok(fit) => {
            score.inlier_count = fit.inlier_count();
            score.r_tilde = symmetric_overlap(&fit.homography, width, height);
        }
        Err(e) => log::debug!("pair overlap: {e}"),
    }
    score
}
