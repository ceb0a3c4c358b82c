use serde::{Deserialize, Serialize};

use super::FeatureSet;

pub const DEFAULT_RATIO: f32 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Lowe ratio: keep a match iff `d1 / d2 < ratio`.
    pub ratio: f32,
    /// Also require the match to be the best (ratio-passing) match in the
    /// reverse direction.
    pub mutual: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            ratio: DEFAULT_RATIO,
            mutual: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    /// Index into the first set.
    pub a: usize,
    /// Index into the second set.
    pub b: usize,
    /// Euclidean descriptor distance.
    pub distance: f32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<Match>,
    pub ratio_threshold: f32,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[inline]
fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            let d = x[i] - y[i];
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    acc.iter().sum::<f32>() + tail
}

/// Nearest and second-nearest neighbour of every row of `a` in `b`, as
/// `(index, d1^2, d2^2)`. Ties go to the lower index.
fn two_nearest(a: &FeatureSet, b: &FeatureSet) -> Vec<(usize, f32, f32)> {
    (0..a.len())
        .map(|i| {
            let da = a.descriptor(i);
            let (mut best, mut d1, mut d2) = (usize::MAX, f32::INFINITY, f32::INFINITY);
            for j in 0..b.len() {
                let d = squared_distance(da, b.descriptor(j));
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                    best = j;
                } else if d < d2 {
                    d2 = d;
                }
            }
            (best, d1, d2)
        })
        .collect()
}

fn passes_ratio(d1_sq: f32, d2_sq: f32, ratio: f32) -> bool {
    // d1/d2 < ratio, written to reject the 0/0 case.
    d1_sq.sqrt() < ratio * d2_sq.sqrt()
}

/// Ratio-test matching of `a` against `b`.
///
/// Returns an empty set when either side has fewer than two descriptors.
pub fn match_features(a: &FeatureSet, b: &FeatureSet, config: &MatchConfig) -> MatchSet {
    assert!(
        config.ratio > 0.0 && config.ratio <= 1.0,
        "ratio must lie in (0, 1], got {}",
        config.ratio
    );
    let mut out = MatchSet {
        pairs: Vec::new(),
        ratio_threshold: config.ratio,
    };
    if a.len() < 2 || b.len() < 2 || a.dim() != b.dim() {
        return out;
    }
    let forward = two_nearest(a, b);
    let backward = config.mutual.then(|| two_nearest(b, a));
    for (i, &(j, d1, d2)) in forward.iter().enumerate() {
        if !passes_ratio(d1, d2, config.ratio) {
            continue;
        }
        if let Some(back) = &backward {
            let (ib, e1, e2) = back[j];
            if ib != i || !passes_ratio(e1, e2, config.ratio) {
                continue;
            }
        }
        out.pairs.push(Match {
            a: i,
            b: j,
            distance: d1.sqrt(),
        });
    }
    out
}
