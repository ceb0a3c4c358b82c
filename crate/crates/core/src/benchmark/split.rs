use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchmarkError;
use crate::geometry::RegisteredFrame;

/// Default share of out-of-action frames that enter evaluation.
pub const DEFAULT_OOA_EVAL_RATE: f64 = 0.006;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSegment {
    pub video_id: String,
    /// Seconds.
    pub start: f64,
    pub stop: f64,
    pub verb: String,
}

impl ActionSegment {
    pub fn new(
        video_id: impl Into<String>,
        start: f64,
        stop: f64,
        verb: impl Into<String>,
    ) -> Result<Self, BenchmarkError> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(BenchmarkError::Input(format!(
                "segment [{start}, {stop}) is empty or not finite"
            )));
        }
        Ok(ActionSegment {
            video_id: video_id.into(),
            start,
            stop,
            verb: verb.into(),
        })
    }

    /// Half-open: `start <= t < stop`.
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.stop
    }
}

/// Reads `video_id,start_sec,stop_sec,verb` rows; a header row starting with
/// `video_id` is skipped.
pub fn read_segments_csv(path: &Path) -> Result<Vec<ActionSegment>, BenchmarkError> {
    let file_err = |message: String| BenchmarkError::File {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| file_err(e.to_string()))?;
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| file_err(e.to_string()))?;
        if k == 0 && rec.get(0) == Some("video_id") {
            continue;
        }
        if rec.len() != 4 {
            return Err(file_err(format!(
                "row {}: expected 4 fields, found {}",
                k + 1,
                rec.len()
            )));
        }
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| file_err(format!("row {}: invalid number {:?}", k + 1, &rec[i])))
        };
        let seg = ActionSegment::new(&rec[0], num(1)?, num(2)?, &rec[3])
            .map_err(|e| file_err(format!("row {}: {e}", k + 1)))?;
        out.push(seg);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub hard_verbs: BTreeSet<String>,
    /// Seconds; train frames closer than this to a hard or medium
    /// evaluation frame are discarded.
    pub exclusion_window: f64,
    /// Share of sampled out-of-action frames labelled easy.
    pub easy_fraction: f64,
    /// Share of out-of-action frames sampled for evaluation.
    pub ooa_eval_rate: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            hard_verbs: ["put", "take", "cut"].iter().map(|s| s.to_string()).collect(),
            exclusion_window: 1.0,
            easy_fraction: 0.30,
            ooa_eval_rate: DEFAULT_OOA_EVAL_RATE,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        for (name, v) in [
            ("easy_fraction", self.easy_fraction),
            ("ooa_eval_rate", self.ooa_eval_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(BenchmarkError::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.exclusion_window >= 0.0 && self.exclusion_window.is_finite()) {
            return Err(BenchmarkError::Config(format!(
                "exclusion_window must be a non-negative number, got {}",
                self.exclusion_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Train,
    ValHard,
    TestHard,
    ValMedium,
    TestMedium,
    ValEasy,
    TestEasy,
    Discarded,
}

impl Label {
    pub const ALL: [Label; 8] = [
        Label::Train,
        Label::ValHard,
        Label::TestHard,
        Label::ValMedium,
        Label::TestMedium,
        Label::ValEasy,
        Label::TestEasy,
        Label::Discarded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Train => "train",
            Label::ValHard => "val-hard",
            Label::TestHard => "test-hard",
            Label::ValMedium => "val-medium",
            Label::TestMedium => "test-medium",
            Label::ValEasy => "val-easy",
            Label::TestEasy => "test-easy",
            Label::Discarded => "discarded",
        }
    }

    pub fn is_eval(self) -> bool {
        !matches!(self, Label::Train | Label::Discarded)
    }

    pub fn is_val(self) -> bool {
        matches!(self, Label::ValHard | Label::ValMedium | Label::ValEasy)
    }

    /// Hard and medium evaluation frames push training frames away.
    pub fn excludes_neighbours(self) -> bool {
        matches!(
            self,
            Label::ValHard | Label::TestHard | Label::ValMedium | Label::TestMedium
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub frame: String,
    pub timestamp: f64,
    pub label: Label,
}

/// Labels for every registered frame, in temporal order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub entries: Vec<SplitEntry>,
    pub warnings: Vec<String>,
}

impl SplitAssignment {
    pub fn label(&self, frame: &str) -> Option<Label> {
        self.entries.iter().find(|e| e.frame == frame).map(|e| e.label)
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Mean time between consecutive evaluation frames, if there are two.
    pub fn mean_eval_gap(&self) -> Option<f64> {
        let t: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.label.is_eval())
            .map(|e| e.timestamp)
            .collect();
        (t.len() >= 2).then(|| (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64)
    }

    /// `frame_name,label` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame_name", "label"]).expect("in-memory write");
        for e in &self.entries {
            w.write_record([e.frame.as_str(), e.label.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Tier {
    Hard,
    Medium,
    Easy,
}

/// Assigns train/val/test labels with difficulty tiers.
///
/// Frames are ordered by `(timestamp, name)`. Hard evaluation frames are
/// the frames inside a hard-verb segment (restricted to `visor_frames` when
/// given). Out-of-action frames lie inside no segment at all; a seeded
/// sample of `round(ooa_eval_rate * n)` of them is evaluated, of which
/// `round(easy_fraction * m)` are easy and the rest medium. Evaluation frames
/// alternate val, test, val, ... in temporal order across all tiers. Train
/// frames within `exclusion_window` seconds (strictly closer) of a hard or
/// medium evaluation frame are discarded.
pub fn generate_split(
    frames: &[RegisteredFrame],
    segments: &[ActionSegment],
    visor_frames: Option<&BTreeSet<String>>,
    config: &SplitConfig,
) -> Result<SplitAssignment, BenchmarkError> {
    config.validate()?;
    let mut seen = HashSet::new();
    for f in frames {
        if !f.timestamp.is_finite() {
            return Err(BenchmarkError::Input(format!(
                "frame {:?} has no valid timestamp",
                f.name
            )));
        }
        if !seen.insert(f.name.as_str()) {
            return Err(BenchmarkError::Input(format!("duplicate frame {:?}", f.name)));
        }
    }
    let videos: BTreeSet<&str> = segments.iter().map(|s| s.video_id.as_str()).collect();
    if videos.len() > 1 {
        return Err(BenchmarkError::Input(format!(
            "segments span {} videos; split one video at a time",
            videos.len()
        )));
    }

    let mut order: Vec<&RegisteredFrame> = frames.iter().collect();
    order.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then_with(|| a.name.cmp(&b.name)));

    let mut tiers: Vec<Option<Tier>> = vec![None; order.len()];
    let mut out_of_action = Vec::new();
    for (k, f) in order.iter().enumerate() {
        let inside: Vec<&ActionSegment> = segments.iter().filter(|s| s.contains(f.timestamp)).collect();
        if inside.is_empty() {
            out_of_action.push(k);
        } else if inside.iter().any(|s| config.hard_verbs.contains(&s.verb))
            && visor_frames.is_none_or(|v| v.contains(&f.name))
        {
            tiers[k] = Some(Tier::Hard);
        }
    }

    let mut warnings = Vec::new();
    if out_of_action.is_empty() {
        let msg = "no out-of-action frames; the split has hard evaluation frames only".to_string();
        warn!("{msg}");
        warnings.push(msg);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = ((config.ooa_eval_rate * out_of_action.len() as f64).round() as usize).min(out_of_action.len());
    let mut chosen: Vec<usize> = sample(&mut rng, out_of_action.len(), m).into_vec();
    chosen.sort_unstable();
    let n_easy = ((config.easy_fraction * m as f64).round() as usize).min(m);
    let easy: HashSet<usize> = sample(&mut rng, m, n_easy).into_iter().collect();
    for (c, &pos) in chosen.iter().enumerate() {
        tiers[out_of_action[pos]] = Some(if easy.contains(&c) { Tier::Easy } else { Tier::Medium });
    }

    let mut labels = vec![Label::Train; order.len()];
    let mut val_next = true;
    for (k, tier) in tiers.iter().enumerate() {
        let Some(tier) = tier else { continue };
        labels[k] = match (tier, val_next) {
            (Tier::Hard, true) => Label::ValHard,
            (Tier::Hard, false) => Label::TestHard,
            (Tier::Medium, true) => Label::ValMedium,
            (Tier::Medium, false) => Label::TestMedium,
            (Tier::Easy, true) => Label::ValEasy,
            (Tier::Easy, false) => Label::TestEasy,
        };
        val_next = !val_next;
    }

    let blockers: Vec<f64> = order
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.excludes_neighbours())
        .map(|(f, _)| f.timestamp)
        .collect();
    for (k, f) in order.iter().enumerate() {
        if labels[k] != Label::Train {
            continue;
        }
        // blockers is sorted; only the nearest on each side matters.
        let i = blockers.partition_point(|&t| t < f.timestamp);
        let near = |j: usize| {
            blockers
                .get(j)
                .is_some_and(|&t| (t - f.timestamp).abs() < config.exclusion_window)
        };
        if near(i) || (i > 0 && near(i - 1)) {
            labels[k] = Label::Discarded;
        }
    }

    Ok(SplitAssignment {
        entries: order
            .iter()
            .zip(labels)
            .map(|(f, label)| SplitEntry {
                frame: f.name.clone(),
                timestamp: f.timestamp,
                label,
            })
            .collect(),
        warnings,
    })
}
