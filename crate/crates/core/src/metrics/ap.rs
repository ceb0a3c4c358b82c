use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_shape, MetricError};
use crate::propagation::BinaryMask;

/// Per-pixel foreground confidence in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScoreMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if values.len() != width * height {
            return Err(MetricError::DimensionMismatch(format!(
                "{} scores for {width}x{height}",
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(MetricError::OutOfRange { index, value });
        }
        Ok(ScoreMap { width, height, values })
    }

    /// 1 inside the mask, 0 outside.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        ScoreMap {
            width: mask.width(),
            height: mask.height(),
            values: mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Unevaluated sum `hi + lo` with `|lo|` below half an ulp of `hi`.
#[derive(Clone, Copy, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        DoubleDouble {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    /// `a / b` to about twice double precision.
    fn quotient(a: f64, b: f64) -> Self {
        let q = a / b;
        DoubleDouble {
            hi: q,
            lo: (-q).mul_add(b, a) / b,
        }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        Self::two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    fn div(self, b: f64) -> f64 {
        let q = self.hi / b;
        let r = (-q).mul_add(b, self.hi) + self.lo;
        q + r / b
    }
}

/// Mean of the precision at the rank of every positive pixel, ranking by
/// descending score. Equal scores keep row-major pixel order. The sum is
/// carried in double-double so simple fractions come out correctly rounded.
fn ranked_ap(mut ranked: Vec<(f64, bool)>) -> Result<f64, MetricError> {
    let positives = ranked.iter().filter(|(_, p)| *p).count();
    if positives == 0 {
        return Err(MetricError::EmptyGroundTruth);
    }
    // Stable sort: ties stay in input order.
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut hits = 0usize;
    let mut sum = DoubleDouble::default();
    for (rank, (_, positive)) in ranked.iter().enumerate() {
        if *positive {
            hits += 1;
            sum = sum.add(DoubleDouble::quotient(hits as f64, (rank + 1) as f64));
        }
    }
    Ok(sum.div(positives as f64))
}

pub fn average_precision(scores: &ScoreMap, gt: &BinaryMask) -> Result<f64, MetricError> {
    check_shape(
        "scores vs ground truth",
        (scores.width, scores.height),
        (gt.width(), gt.height()),
    )?;
    ranked_ap(scores.values.iter().copied().zip(gt.bits().iter().copied()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    /// `None` for frames skipped because their ground truth is empty.
    pub per_frame: Vec<Option<f64>>,
    /// Mean over the frames with defined AP.
    pub mean: f64,
    pub skipped: usize,
}

/// Per-frame AP and its mean. Frames with empty ground truth are skipped;
/// it is an error when every frame is empty.
pub fn mean_average_precision(frames: &[(&ScoreMap, &BinaryMask)]) -> Result<ApSummary, MetricError> {
    let mut per_frame = Vec::with_capacity(frames.len());
    for (s, g) in frames {
        per_frame.push(match average_precision(s, g) {
            Ok(v) => Some(v),
            Err(MetricError::EmptyGroundTruth) => None,
            Err(e) => return Err(e),
        });
    }
    let defined: Vec<f64> = per_frame.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(MetricError::EmptyGroundTruth);
    }
    Ok(ApSummary {
        mean: defined.iter().sum::<f64>() / defined.len() as f64,
        skipped: per_frame.len() - defined.len(),
        per_frame,
    })
}

/// AP over the pixels of all frames ranked together.
pub fn pooled_average_precision(frames: &[(&ScoreMap, &BinaryMask)]) -> Result<f64, MetricError> {
    let mut all = Vec::new();
    for (s, g) in frames {
        check_shape("scores vs ground truth", (s.width, s.height), (g.width(), g.height()))?;
        all.extend(s.values.iter().copied().zip(g.bits().iter().copied()));
    }
    ranked_ap(all)
}

/// Mean over videos of each video's mean value; videos with no values are
/// ignored. Returns `None` when nothing is defined.
pub fn video_mean(per_video: &BTreeMap<String, Vec<f64>>) -> Option<f64> {
    let means: Vec<f64> = per_video
        .values()
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_enumerated_fixture() {
        // Pixels a, b, c, d in row-major order; gt = {a, b}.
        let scores = ScoreMap::new(4, 1, vec![0.9, 0.7, 0.8, 0.1]).unwrap();
        let gt = BinaryMask::from_bits(4, 1, 1, vec![true, true, false, false]).unwrap();
        assert_eq!(average_precision(&scores, &gt).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn perfect_and_tied_scores() {
        let gt = BinaryMask::rect(8, 8, 1, 2, 2, 5, 6);
        assert_eq!(average_precision(&ScoreMap::from_mask(&gt), &gt).unwrap(), 1.0);
        // All scores equal: ranking is row-major order.
        let flat = ScoreMap::new(2, 1, vec![0.5, 0.5]).unwrap();
        let second = BinaryMask::from_bits(2, 1, 1, vec![false, true]).unwrap();
        assert_eq!(average_precision(&flat, &second).unwrap(), 0.5);
        let first = BinaryMask::from_bits(2, 1, 1, vec![true, false]).unwrap();
        assert_eq!(average_precision(&flat, &first).unwrap(), 1.0);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            ScoreMap::new(2, 1, vec![0.5, 1.5]),
            Err(MetricError::OutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            ScoreMap::new(2, 1, vec![f64::NAN, 0.0]),
            Err(MetricError::OutOfRange { index: 0, .. })
        ));
        let s = ScoreMap::new(2, 1, vec![0.5, 0.5]).unwrap();
        let e = BinaryMask::empty(2, 1, 1);
        assert_eq!(average_precision(&s, &e), Err(MetricError::EmptyGroundTruth));
        assert_eq!(mean_average_precision(&[(&s, &e)]), Err(MetricError::EmptyGroundTruth));
    }

    #[test]
    fn map_skips_empty_frames() {
        let s = ScoreMap::new(4, 1, vec![0.9, 0.7, 0.8, 0.1]).unwrap();
        let g = BinaryMask::from_bits(4, 1, 1, vec![true, true, false, false]).unwrap();
        let e = BinaryMask::empty(4, 1, 1);
        let perfect = ScoreMap::from_mask(&g);
        let m = mean_average_precision(&[(&s, &g), (&s, &e), (&perfect, &g)]).unwrap();
        assert_eq!(m.per_frame, vec![Some(5.0 / 6.0), None, Some(1.0)]);
        assert_eq!(m.skipped, 1);
        assert!((m.mean - 11.0 / 12.0).abs() < 1e-15);
        // Pooled ranking interleaves the two frames' pixels.
        let pooled = pooled_average_precision(&[(&s, &g), (&perfect, &g)]).unwrap();
        assert!(pooled > 5.0 / 6.0 && pooled < 1.0);
    }

    #[test]
    fn video_granularity() {
        let mut v = BTreeMap::new();
        v.insert("a".to_string(), vec![1.0, 1.0, 1.0]);
        v.insert("b".to_string(), vec![0.0]);
        v.insert("c".to_string(), vec![]);
        assert_eq!(video_mean(&v), Some(0.5));
        assert_eq!(video_mean(&BTreeMap::new()), None);
    }
}
