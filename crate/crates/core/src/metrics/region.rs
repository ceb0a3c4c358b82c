use serde::{Deserialize, Serialize};

use super::{check_shape, MetricError};
use crate::propagation::BinaryMask;

/// Default boundary tolerance as a fraction of the image diagonal.
pub const BOUNDARY_TOLERANCE_FRACTION: f64 = 0.008;

fn shapes(a: &BinaryMask, b: &BinaryMask) -> Result<(), MetricError> {
    check_shape(
        "prediction vs ground truth",
        (a.width(), a.height()),
        (b.width(), b.height()),
    )
}

/// `|pred ∩ gt| / |pred ∪ gt|`, with two empty masks scoring 1.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, MetricError> {
    shapes(pred, gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn jf_mean(j: f64, f: f64) -> f64 {
    (j + f) / 2.0
}

/// Foreground pixels with at least one 4-neighbour inside the image that is
/// background. Pixels outside the image are not treated as background.
pub fn boundary_map(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    BinaryMask::from_fn(w, h, mask.object_id, |x, y| {
        mask.get(x, y)
            && ((x > 0 && !mask.get(x - 1, y))
                || (x + 1 < w && !mask.get(x + 1, y))
                || (y > 0 && !mask.get(x, y - 1))
                || (y + 1 < h && !mask.get(x, y + 1)))
    })
}

/// `ceil(0.008 * diagonal)` pixels.
pub fn default_boundary_tolerance(width: usize, height: usize) -> f64 {
    (BOUNDARY_TOLERANCE_FRACTION * ((width * width + height * height) as f64).sqrt()).ceil()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryF {
    pub f: f64,
    pub precision: f64,
    pub recall: f64,
    /// Predicted boundary pixels within tolerance of a ground-truth one.
    pub matched_pred: usize,
    pub pred_boundary: usize,
    /// Ground-truth boundary pixels within tolerance of a predicted one.
    pub matched_gt: usize,
    pub gt_boundary: usize,
}

/// Dilation of `mask` by the disk `dx^2 + dy^2 <= r^2`.
fn dilate_disk(mask: &BinaryMask, r: f64) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let ri = r.floor() as isize;
    let offsets: Vec<(isize, isize)> = (-ri..=ri)
        .flat_map(|dy| (-ri..=ri).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
        .collect();
    let mut out = BinaryMask::empty(mask.width(), mask.height(), mask.object_id);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (u, v) = (x + dx, y + dy);
                if u >= 0 && v >= 0 && u < w && v < h {
                    out.set(u as usize, v as usize, true);
                }
            }
        }
    }
    out
}

/// Contour accuracy: boundary pixels of each mask count as matched when a
/// boundary pixel of the other lies within Euclidean distance `tolerance`
/// (default [`default_boundary_tolerance`]). Two empty boundaries score 1.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tolerance: Option<f64>) -> Result<BoundaryF, MetricError> {
    shapes(pred, gt)?;
    let tol = tolerance.unwrap_or_else(|| default_boundary_tolerance(pred.width(), pred.height()));
    let bp = boundary_map(pred);
    let bg = boundary_map(gt);
    let (np, ng) = (bp.count(), bg.count());
    let near_gt = dilate_disk(&bg, tol);
    let near_pred = dilate_disk(&bp, tol);
    let matched_pred = bp.bits().iter().zip(near_gt.bits()).filter(|(a, b)| **a && **b).count();
    let matched_gt = bg
        .bits()
        .iter()
        .zip(near_pred.bits())
        .filter(|(a, b)| **a && **b)
        .count();
    let (precision, recall) = match (np, ng) {
        (0, 0) => (1.0, 1.0),
        (0, _) => (1.0, 0.0),
        (_, 0) => (0.0, 1.0),
        _ => (matched_pred as f64 / np as f64, matched_gt as f64 / ng as f64),
    };
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BoundaryF {
        f,
        precision,
        recall,
        matched_pred,
        pred_boundary: np,
        matched_gt,
        gt_boundary: ng,
    })
}
