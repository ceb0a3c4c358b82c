use nalgebra::Point2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::homography::{dlt_solve, Homography};
use super::OverlapError;
use crate::features::{Keypoint, MatchSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    /// Upper bound on the adaptive iteration count.
    pub max_iterations: usize,
    /// Forward transfer error, in pixels, below which a match is an inlier.
    pub inlier_threshold: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            max_iterations: 2000,
            inlier_threshold: 3.0,
            confidence: 0.999,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyFit {
    pub homography: Homography,
    pub inliers: Vec<bool>,
    pub iterations: usize,
}

impl HomographyFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|b| **b).count()
    }
}

fn transfer_error(h: &Homography, p: &Point2<f64>, q: &Point2<f64>) -> f64 {
    let v = h.apply_homogeneous(p);
    if !(v.z.abs() > 1e-15) {
        return f64::INFINITY;
    }
    ((v.x / v.z - q.x).powi(2) + (v.y / v.z - q.y).powi(2)).sqrt()
}

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// True if any three of the four points are (nearly) collinear.
fn degenerate_sample(p: &[Point2<f64>; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|t| cross(&p[t[0]], &p[t[1]], &p[t[2]]).abs() < 1e-6)
}

/// Iterations needed to draw one all-inlier sample with probability
/// `confidence` given inlier fraction `w`.
fn required_iterations(w: f64, confidence: f64, cap: usize) -> usize {
    let good = w.powi(4);
    if good >= 1.0 {
        return 1;
    }
    if good <= 0.0 {
        return cap;
    }
    let n = (1.0 - confidence).ln() / (1.0 - good).ln();
    if n.is_finite() {
        (n.ceil() as usize).clamp(1, cap)
    } else {
        cap
    }
}

/// Robust homography from point correspondences `src[i] -> dst[i]`.
///
/// Four-point samples are drawn from a ChaCha8 stream seeded by
/// `config.seed`; the best-supported model is re-fit on all of its inliers.
pub fn ransac_homography(
    src: &[Point2<f64>],
    dst: &[Point2<f64>],
    config: &RansacConfig,
) -> Result<HomographyFit, OverlapError> {
    assert_eq!(src.len(), dst.len(), "correspondence lists differ in length");
    let n = src.len();
    if n < 4 {
        return Err(OverlapError::InsufficientMatches { found: n, required: 4 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let thr = config.inlier_threshold;
    let score = |h: &Homography| -> (usize, f64) {
        let mut count = 0;
        let mut cost = 0.0;
        for (p, q) in src.iter().zip(dst) {
            let e = transfer_error(h, p, q);
            if e < thr {
                count += 1;
                cost += e;
            } else {
                cost += thr;
            }
        }
        (count, cost)
    };

    let mut best: Option<(Homography, usize, f64)> = None;
    let mut needed = config.max_iterations.max(1);
    let mut iterations = 0;
    while iterations < needed {
        iterations += 1;
        let idx = sample(&mut rng, n, 4);
        let s: [Point2<f64>; 4] = std::array::from_fn(|k| src[idx.index(k)]);
        let d: [Point2<f64>; 4] = std::array::from_fn(|k| dst[idx.index(k)]);
        if degenerate_sample(&s) || degenerate_sample(&d) {
            continue;
        }
        let Ok(h) = dlt_solve(&s, &d) else { continue };
        let (count, cost) = score(&h);
        let better = match &best {
            None => true,
            Some((_, bc, bcost)) => count > *bc || (count == *bc && cost < *bcost),
        };
        if better {
            best = Some((h, count, cost));
            needed = required_iterations(count as f64 / n as f64, config.confidence, config.max_iterations.max(1));
        }
    }

    let (mut h, count, _) = best.ok_or(OverlapError::NoConsensus)?;
    if count < 4 {
        return Err(OverlapError::NoConsensus);
    }
    let mut mask = inlier_mask(&h, src, dst, thr);
    // Re-fit on the consensus set; a few rounds settle the mask.
    for _ in 0..3 {
        let (s, d): (Vec<_>, Vec<_>) = mask
            .iter()
            .zip(src.iter().zip(dst))
            .filter(|(m, _)| **m)
            .map(|(_, (p, q))| (*p, *q))
            .unzip();
        let Ok(refit) = dlt_solve(&s, &d) else { break };
        let new_mask = inlier_mask(&refit, src, dst, thr);
        if new_mask.iter().filter(|b| **b).count() < 4 {
            break;
        }
        h = refit;
        if new_mask == mask {
            break;
        }
        mask = new_mask;
    }
    let mask = inlier_mask(&h, src, dst, thr);
    Ok(HomographyFit {
        homography: h,
        inliers: mask,
        iterations,
    })
}

fn inlier_mask(h: &Homography, src: &[Point2<f64>], dst: &[Point2<f64>], thr: f64) -> Vec<bool> {
    src.iter()
        .zip(dst)
        .map(|(p, q)| transfer_error(h, p, q) < thr)
        .collect()
}

/// [`ransac_homography`] on matched keypoints; the mask is indexed like
/// `matches.pairs`.
pub fn estimate_homography(
    matches: &MatchSet,
    keypoints_a: &[Keypoint],
    keypoints_b: &[Keypoint],
    config: &RansacConfig,
) -> Result<HomographyFit, OverlapError> {
    let (src, dst): (Vec<_>, Vec<_>) = matches
        .pairs
        .iter()
        .map(|m| {
            let (a, b) = (keypoints_a[m.a], keypoints_b[m.b]);
            (Point2::new(a.x as f64, a.y as f64), Point2::new(b.x as f64, b.y as f64))
        })
        .unzip();
    ransac_homography(&src, &dst, config)
}
