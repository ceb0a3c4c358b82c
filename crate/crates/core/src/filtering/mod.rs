//! Greedy window-based frame subsampling.
//!
//! Frames are scanned in order. Each window starts at an anchor frame and
//! grows while the symmetric visual overlap between the anchor and the next
//! frame stays at or above the threshold; only the anchor is kept.

mod source;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, FeatureSet, MatchConfig, Sift, SiftConfig};
use crate::overlap::{pair_overlap, OverlapScore, PairConfig, RansacConfig};

pub use source::{
    Extracting, FeatureFiles, FeatureProvider, FrameSource, ImageDirSource, ManifestSource, MemorySource, Strided,
};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("no frames to filter")]
    NoFrames,
    #[error("frame {index} ({name}) is unreadable: {source}")]
    UnreadableFrame {
        index: usize,
        name: String,
        #[source]
        source: FeatureError,
    },
    #[error("frame source: {0}")]
    Source(String),
}

/// What to do with a frame that cannot be decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnreadablePolicy {
    #[default]
    Abort,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub overlap_threshold: f64,
    /// Threshold used when a reconstruction is attempted a second time.
    pub restart_threshold: f64,
    /// Fewer ratio-test matches than this counts as zero overlap.
    pub min_matches: usize,
    /// Longest window, anchor included.
    pub max_window: usize,
    pub ransac: RansacConfig,
    pub matching: MatchConfig,
    pub sift: SiftConfig,
    /// Only every `frame_stride`-th source frame is decoded.
    pub frame_stride: usize,
    pub on_unreadable: UnreadablePolicy,
    /// Frames whose features are extracted together ahead of the scan.
    pub prefetch: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            overlap_threshold: 0.9,
            restart_threshold: 0.95,
            min_matches: 20,
            max_window: 3000,
            ransac: RansacConfig::default(),
            matching: MatchConfig::default(),
            sift: SiftConfig::default(),
            frame_stride: 1,
            on_unreadable: UnreadablePolicy::Abort,
            prefetch: 8,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let (t, r) = (self.overlap_threshold, self.restart_threshold);
        if !(t > 0.0 && t <= r && r <= 1.0) {
            return Err(FilterError::InvalidConfig(format!(
                "need 0 < overlap_threshold <= restart_threshold <= 1, got {t} and {r}"
            )));
        }
        if self.max_window == 0 || self.frame_stride == 0 {
            return Err(FilterError::InvalidConfig(
                "max_window and frame_stride must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Configuration for reconstruction attempt `attempt` (1-based): the
    /// second attempt filters at the restart threshold.
    pub fn for_attempt(&self, attempt: u32) -> FilterConfig {
        let mut c = self.clone();
        if attempt >= 2 {
            c.overlap_threshold = self.restart_threshold;
        }
        c
    }

    pub fn pair_config(&self) -> PairConfig {
        PairConfig {
            matching: self.matching,
            ransac: self.ransac.clone(),
            min_matches: self.min_matches,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub anchor: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub r_tilde: f64,
    pub inliers: usize,
    pub matches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub kept: Vec<usize>,
    pub windows: Vec<Window>,
    pub pair_log: Vec<PairRecord>,
    /// Frames dropped as unreadable; they belong to no window.
    #[serde(default)]
    pub skipped: Vec<usize>,
    pub total: usize,
    pub discard_rate: f64,
}

impl FilterResult {
    fn finish(
        kept: Vec<usize>,
        windows: Vec<Window>,
        pair_log: Vec<PairRecord>,
        skipped: Vec<usize>,
        total: usize,
    ) -> Self {
        let discard_rate = if total == 0 {
            0.0
        } else {
            1.0 - kept.len() as f64 / total as f64
        };
        FilterResult {
            kept,
            windows,
            pair_log,
            skipped,
            total,
            discard_rate,
        }
    }
}

/// The greedy scan over `frames` (ascending indices) given any pairwise
/// overlap function.
pub fn greedy_windows<E>(
    frames: &[usize],
    threshold: f64,
    max_window: usize,
    mut overlap: impl FnMut(usize, usize) -> Result<OverlapScore, E>,
) -> Result<(Vec<Window>, Vec<PairRecord>), E> {
    let mut windows = Vec::new();
    let mut log = Vec::new();
    let mut a = 0;
    while a < frames.len() {
        let anchor = frames[a];
        let mut b = a + 1;
        while b < frames.len() && b - a < max_window {
            let s = overlap(anchor, frames[b])?;
            log.push(PairRecord {
                i: anchor,
                j: frames[b],
                r_tilde: s.r_tilde,
                inliers: s.inlier_count,
                matches: s.matched_count,
            });
            if s.r_tilde < threshold {
                break;
            }
            b += 1;
        }
        windows.push(Window { anchor, len: b - a });
        a = b;
    }
    Ok((windows, log))
}

/// [`greedy_windows`] over frames `0..n`, packaged as a [`FilterResult`].
/// Used with exact overlaps, e.g. from a synthetic scene.
pub fn filter_by_overlap<E>(
    n: usize,
    config: &FilterConfig,
    overlap: impl FnMut(usize, usize) -> Result<OverlapScore, E>,
) -> Result<FilterResult, E> {
    let frames: Vec<usize> = (0..n).collect();
    let (windows, log) = greedy_windows(&frames, config.overlap_threshold, config.max_window, overlap)?;
    let kept = windows.iter().map(|w| w.anchor).collect();
    Ok(FilterResult::finish(kept, windows, log, vec![], n))
}

/// Features of frames at and after the current anchor.
struct FeatureCache<'a> {
    provider: &'a dyn FeatureProvider,
    prefetch: usize,
    policy: UnreadablePolicy,
    entries: BTreeMap<usize, Result<(FeatureSet, usize, usize), FeatureError>>,
}

impl FeatureCache<'_> {
    /// Extracts `index` and the following frames in parallel unless cached.
    fn ensure(&mut self, index: usize) {
        if self.entries.contains_key(&index) {
            return;
        }
        let end = (index + self.prefetch.max(1)).min(self.provider.len());
        let todo: Vec<usize> = (index..end).filter(|i| !self.entries.contains_key(i)).collect();
        let provider = self.provider;
        let computed: Vec<_> = todo.par_iter().map(|&i| (i, provider.features(i))).collect();
        self.entries.extend(computed);
    }

    /// Whether frame `index` is usable; aborts on unreadable frames unless
    /// the policy says to skip them.
    fn readable(&mut self, index: usize) -> Result<bool, FilterError> {
        self.ensure(index);
        if self.entries[&index].is_ok() {
            return Ok(true);
        }
        let Some(Err(e)) = self.entries.remove(&index) else {
            unreachable!()
        };
        match self.policy {
            UnreadablePolicy::Skip => {
                log::warn!("skipping unreadable frame {index}: {e}");
                Ok(false)
            }
            UnreadablePolicy::Abort => Err(FilterError::UnreadableFrame {
                index,
                name: self.provider.name(index),
                source: e,
            }),
        }
    }

    fn evict_before(&mut self, index: usize) {
        self.entries = self.entries.split_off(&index);
    }
}

/// Filters frames whose features come from `provider`.
pub fn filter_features(provider: &dyn FeatureProvider, config: &FilterConfig) -> Result<FilterResult, FilterError> {
    config.validate()?;
    let n = provider.len();
    if n == 0 {
        return Err(FilterError::NoFrames);
    }
    let mut cache = FeatureCache {
        provider,
        prefetch: config.prefetch,
        policy: config.on_unreadable,
        entries: BTreeMap::new(),
    };
    // Unreadable frames are found lazily as the scan reaches them.
    let mut skipped = Vec::new();
    let pair_cfg = config.pair_config();

    let mut windows = Vec::new();
    let mut log = Vec::new();
    let mut next = 0;
    while next < n {
        let anchor = next;
        next += 1;
        if !cache.readable(anchor)? {
            skipped.push(anchor);
            continue;
        }
        cache.evict_before(anchor);
        let mut len = 1;
        while next < n && len < config.max_window {
            let j = next;
            if !cache.readable(j)? {
                skipped.push(j);
                next += 1;
                continue;
            }
            let (Some(Ok((fa, wa, ha))), Some(Ok((fb, wb, hb)))) = (cache.entries.get(&anchor), cache.entries.get(&j))
            else {
                unreachable!("both frames were loaded above")
            };
            let score = if (wa, ha) == (wb, hb) {
                let mut pc = pair_cfg.clone();
                pc.ransac.seed = pair_seed(config.ransac.seed, anchor, j);
                pair_overlap(fa, fb, *wa as f64, *ha as f64, &pc)
            } else {
                log::warn!("frames {anchor} and {j} differ in size; treating overlap as 0");
                OverlapScore::default()
            };
            log.push(PairRecord {
                i: anchor,
                j,
                r_tilde: score.r_tilde,
                inliers: score.inlier_count,
                matches: score.matched_count,
            });
            if score.r_tilde < config.overlap_threshold {
                break;
            }
            len += 1;
            next += 1;
        }
        windows.push(Window { anchor, len });
    }
    let kept = windows.iter().map(|w| w.anchor).collect();
    Ok(FilterResult::finish(kept, windows, log, skipped, n))
}

fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    seed ^ ((i as u64) << 32 | j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Filters the frames of `source` with the reference SIFT detector.
pub fn filter_frames(source: &dyn FrameSource, config: &FilterConfig) -> Result<FilterResult, FilterError> {
    let strided = Strided::new(source, config.frame_stride);
    let sift = Sift::new(config.sift.clone());
    let provider = Extracting {
        source: &strided,
        detector: &sift,
    };
    let r = filter_features(&provider, config)?;
    if config.frame_stride <= 1 {
        return Ok(r);
    }
    // Report indices, window spans and the discard rate in source frames.
    let map = |i: usize| strided.source_index(i);
    let kept: Vec<usize> = r.kept.iter().map(|&k| map(k)).collect();
    let windows = kept
        .iter()
        .enumerate()
        .map(|(k, &anchor)| Window {
            anchor,
            len: kept.get(k + 1).copied().unwrap_or(source.len()) - anchor,
        })
        .collect();
    let pair_log = r
        .pair_log
        .iter()
        .map(|p| PairRecord {
            i: map(p.i),
            j: map(p.j),
            ..*p
        })
        .collect();
    let skipped = r.skipped.iter().map(|&k| map(k)).collect();
    Ok(FilterResult::finish(kept, windows, pair_log, skipped, source.len()))
}

/// Baseline: every `ceil(n / kept_count)`-th frame.
pub fn compare_uniform(n: usize, kept_count: usize) -> FilterResult {
    assert!(kept_count >= 1, "kept_count must be at least 1");
    if n == 0 {
        return FilterResult::finish(vec![], vec![], vec![], vec![], 0);
    }
    let step = n.div_ceil(kept_count);
    let kept: Vec<usize> = (0..n).step_by(step).collect();
    let windows = kept
        .iter()
        .map(|&a| Window {
            anchor: a,
            len: step.min(n - a),
        })
        .collect();
    FilterResult::finish(kept, windows, vec![], vec![], n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::convert::Infallible;

    fn score(r: f64) -> Result<OverlapScore, Infallible> {
        Ok(OverlapScore {
            r_tilde: r,
            inlier_count: 0,
            matched_count: 0,
        })
    }

    /// Frames on a line; overlap falls linearly with distance.
    fn line_overlap(x: &[f64]) -> impl Fn(usize, usize) -> Result<OverlapScore, Infallible> + '_ {
        move |i, j| score((1.0 - (x[i] - x[j]).abs()).max(0.0))
    }

    fn kept(windows: &[Window]) -> Vec<usize> {
        windows.iter().map(|w| w.anchor).collect()
    }

    #[test]
    fn uniform_baseline() {
        assert_eq!(compare_uniform(100, 10).kept, (0..100).step_by(10).collect::<Vec<_>>());
        assert_eq!(compare_uniform(100, 1).kept, vec![0]);
        assert_eq!(compare_uniform(7, 7).kept, (0..7).collect::<Vec<_>>());
        let r = compare_uniform(10, 4);
        assert_eq!(r.kept, vec![0, 3, 6, 9]);
        assert_eq!(r.windows.iter().map(|w| w.len).sum::<usize>(), 10);
    }

    #[test]
    fn config_bounds() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            overlap_threshold: 0.96,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let zero = FilterConfig {
            overlap_threshold: 0.0,
            ..Default::default()
        };
        assert!(zero.validate().is_err());
        assert_eq!(FilterConfig::default().for_attempt(1).overlap_threshold, 0.9);
        assert_eq!(FilterConfig::default().for_attempt(2).overlap_threshold, 0.95);
    }

    #[test]
    fn windows_close_at_threshold_and_cap() {
        let frames: Vec<usize> = (0..10).collect();
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.04).collect();
        let (w, log) = greedy_windows(&frames, 0.9, 100, line_overlap(&x)).unwrap();
        // Overlap to the anchor is 1 - 0.04 m; m = 3 is the first below 0.9.
        assert_eq!(kept(&w), vec![0, 3, 6, 9]);
        assert_eq!(
            log[2],
            PairRecord {
                i: 0,
                j: 3,
                r_tilde: 1.0 - 0.12,
                inliers: 0,
                matches: 0
            }
        );
        let (w, _) = greedy_windows(&frames, 0.5, 4, line_overlap(&x)).unwrap();
        assert_eq!(kept(&w), vec![0, 4, 8]);
        let (w, _) = greedy_windows(&frames, 1.0, 100, |_, _| score(1.0)).unwrap();
        assert_eq!(kept(&w), vec![0]);
    }

    #[test]
    fn boundary_is_inclusive() {
        let frames = [0, 1, 2];
        let (w, _) = greedy_windows(&frames, 0.9, 10, |_, j| score(if j == 1 { 0.9 } else { 0.0 })).unwrap();
        assert_eq!(kept(&w), vec![0, 2]);
    }

    fn monotone_track() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..0.08, 1..60).prop_map(|steps| {
            let mut x = 0.0;
            steps
                .iter()
                .map(|s| {
                    let v = x;
                    x += s;
                    v
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn windows_partition_the_frames(x in monotone_track(), t in 0.5f64..1.0) {
            let frames: Vec<usize> = (0..x.len()).collect();
            let (w, _) = greedy_windows(&frames, t, 1000, line_overlap(&x)).unwrap();
            let mut next = 0;
            for win in &w {
                prop_assert_eq!(win.anchor, next);
                prop_assert!(win.len >= 1);
                next += win.len;
            }
            prop_assert_eq!(next, x.len());
        }

        #[test]
        fn raising_the_threshold_keeps_more(x in monotone_track(), t in 0.5f64..0.95, dt in 0.0f64..0.05) {
            let frames: Vec<usize> = (0..x.len()).collect();
            let (lo, _) = greedy_windows(&frames, t, 1000, line_overlap(&x)).unwrap();
            let (hi, _) = greedy_windows(&frames, t + dt, 1000, line_overlap(&x)).unwrap();
            prop_assert!(hi.len() >= lo.len());
        }

        #[test]
        fn refiltering_keeps_every_anchor(x in monotone_track(), t in 0.5f64..1.0) {
            let frames: Vec<usize> = (0..x.len()).collect();
            let (w, _) = greedy_windows(&frames, t, 1000, line_overlap(&x)).unwrap();
            let anchors = kept(&w);
            let (again, _) = greedy_windows(&anchors, t, 1000, line_overlap(&x)).unwrap();
            prop_assert_eq!(kept(&again), anchors);
        }
    }
}
