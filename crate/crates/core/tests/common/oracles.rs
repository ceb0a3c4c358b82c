//! Slow, direct reference implementations of the metrics.

use egofields::propagation::BinaryMask;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn psnr(a: &[f64], b: &[f64]) -> f64 {
    let mse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn jaccard(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (mut i, mut u) = (0.0, 0.0);
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) && b.get(x, y) {
                i += 1.0;
            }
            if a.get(x, y) || b.get(x, y) {
                u += 1.0;
            }
        }
    }
    if u == 0.0 {
        1.0
    } else {
        i / u
    }
}

/// Precision at each positive pixel's rank, where a pixel's rank counts
/// the pixels with a higher score or an equal score and lower index.
pub fn average_precision(scores: &[f64], gt: &[bool]) -> f64 {
    let n = scores.len();
    let rank = |p: usize| {
        (0..n)
            .filter(|&q| scores[q] > scores[p] || (scores[q] == scores[p] && q <= p))
            .count()
    };
    let positives: Vec<usize> = (0..n).filter(|&p| gt[p]).collect();
    let mut total = 0.0;
    for &p in &positives {
        let r = rank(p);
        let hits = positives.iter().filter(|&&q| rank(q) <= r).count();
        total += hits as f64 / r as f64;
    }
    total / positives.len() as f64
}

pub fn boundary(m: &BinaryMask) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for y in 0..m.height() as i64 {
        for x in 0..m.width() as i64 {
            if !m.get(x as usize, y as usize) {
                continue;
            }
            let edge = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                let (u, v) = (x + dx, y + dy);
                u >= 0 && v >= 0 && u < m.width() as i64 && v < m.height() as i64 && !m.get(u as usize, v as usize)
            });
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

/// `(matched_pred, pred_boundary, matched_gt, gt_boundary)` by pairwise
/// distances.
pub fn boundary_counts(pred: &BinaryMask, gt: &BinaryMask, tol: f64) -> (usize, usize, usize, usize) {
    let bp = boundary(pred);
    let bg = boundary(gt);
    let near = |a: &(i64, i64), set: &[(i64, i64)]| {
        set.iter()
            .any(|b| (((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64).sqrt() <= tol)
    };
    let mp = bp.iter().filter(|p| near(p, &bg)).count();
    let mg = bg.iter().filter(|p| near(p, &bp)).count();
    (mp, bp.len(), mg, bg.len())
}

/// Random blob-like mask: a union of a few rectangles, occasionally empty.
pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryMask {
    let mut m = BinaryMask::empty(w, h, 1);
    for _ in 0..rng.random_range(0..4) {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (x1, y1) = (rng.random_range(x0 + 1..=w), rng.random_range(y0 + 1..=h));
        m = m.union(&BinaryMask::rect(w, h, 1, x0, y0, x1, y1)).unwrap();
    }
    // Salt noise so that boundaries are not all straight.
    for _ in 0..rng.random_range(0..6) {
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        let v = m.get(x, y);
        m.set(x, y, !v);
    }
    m
}
