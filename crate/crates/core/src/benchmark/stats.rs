use serde::{Deserialize, Serialize};

use super::BenchmarkError;
use crate::geometry::{mean_rotation, relative_orientation, Reconstruction};

pub const ORIENTATION_BINS: usize = 36;
const RATE_BINS: usize = 20;

/// Index of the 10° bin centred on a multiple of 10° that holds `degrees`;
/// bin 0 is centred on -180° and bin 18 on 0°.
pub fn orientation_bin(degrees: f64) -> usize {
    (((degrees + 185.0) / 10.0).floor() as i64).rem_euclid(ORIENTATION_BINS as i64) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; bins are `[lo, hi)` except the last,
    /// which is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn new(edges: Vec<f64>, values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = vec![0; edges.len() - 1];
        let last = counts.len() - 1;
        for v in values {
            let k = edges.partition_point(|e| *e <= v);
            if k == 0 {
                continue;
            }
            if k <= last + 1 {
                counts[k - 1] += 1;
            } else if v == edges[last + 1] {
                counts[last] += 1;
            }
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconSummary {
    pub video: String,
    pub registered: usize,
    pub total: usize,
    pub registration_rate: f64,
    pub accepted: bool,
    /// `None` when the model has no observations.
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationHistogram {
    pub video: String,
    pub pitch: Vec<usize>,
    pub yaw: Vec<usize>,
    pub roll: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconStats {
    pub accept_threshold: f64,
    pub summaries: Vec<ReconSummary>,
    pub rate_histogram: Histogram,
    pub below_threshold: usize,
    /// Decade bins: `[0, 1), [1, 10), [10, 100), ...`.
    pub point_histogram: Histogram,
    pub orientation: Vec<OrientationHistogram>,
}

/// Registration, error, size and orientation statistics over a collection of
/// per-video models.
///
/// Orientations are taken relative to each video's mean rotation and binned
/// into 36 bins of 10° per Euler angle.
pub fn reconstruction_stats(
    recons: &[(String, Reconstruction)],
    accept_threshold: f64,
) -> Result<ReconStats, BenchmarkError> {
    let mut summaries = Vec::with_capacity(recons.len());
    let mut orientation = Vec::with_capacity(recons.len());
    for (video, recon) in recons {
        let errors = recon.reprojection_errors()?;
        let total = recon.total_frame_count.max(recon.registered_count());
        let rate = if total == 0 {
            0.0
        } else {
            recon.registered_count() as f64 / total as f64
        };
        summaries.push(ReconSummary {
            video: video.clone(),
            registered: recon.registered_count(),
            total,
            registration_rate: rate,
            accepted: total > 0 && rate >= accept_threshold,
            mean_error: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
            max_error: errors.iter().copied().reduce(f64::max),
            points: recon.points.len(),
        });

        let mut hist = OrientationHistogram {
            video: video.clone(),
            pitch: vec![0; ORIENTATION_BINS],
            yaw: vec![0; ORIENTATION_BINS],
            roll: vec![0; ORIENTATION_BINS],
        };
        let rotations: Vec<_> = recon.frames.iter().map(|f| *f.pose.rotation()).collect();
        if !rotations.is_empty() {
            let reference = mean_rotation(&rotations)?;
            for f in &recon.frames {
                let [pitch, yaw, roll] = relative_orientation(&f.pose, &reference).degrees();
                hist.pitch[orientation_bin(pitch)] += 1;
                hist.yaw[orientation_bin(yaw)] += 1;
                hist.roll[orientation_bin(roll)] += 1;
            }
        }
        orientation.push(hist);
    }

    let rate_edges = (0..=RATE_BINS).map(|k| k as f64 / RATE_BINS as f64).collect();
    let rate_histogram = Histogram::new(rate_edges, summaries.iter().map(|s| s.registration_rate));
    let below_threshold = summaries
        .iter()
        .filter(|s| s.total > 0 && s.registration_rate < accept_threshold)
        .count();

    let max_points = summaries.iter().map(|s| s.points).max().unwrap_or(0);
    let mut point_edges = vec![0.0, 1.0];
    while *point_edges.last().unwrap() <= max_points as f64 {
        let next = point_edges.last().unwrap() * 10.0;
        point_edges.push(next);
    }
    let point_histogram = Histogram::new(point_edges, summaries.iter().map(|s| s.points as f64));

    Ok(ReconStats {
        accept_threshold,
        summaries,
        rate_histogram,
        below_threshold,
        point_histogram,
        orientation,
    })
}

impl ReconStats {
    /// One row per model.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "video",
            "registered",
            "total",
            "registration_rate",
            "accepted",
            "mean_error",
            "max_error",
            "points",
        ])
        .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.summaries {
            w.write_record([
                s.video.clone(),
                s.registered.to_string(),
                s.total.to_string(),
                s.registration_rate.to_string(),
                s.accepted.to_string(),
                opt(s.mean_error),
                opt(s.max_error),
                s.points.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// `video,axis,bin_center_deg,count,log_count` with
    /// `log_count = log10(1 + count)`.
    pub fn orientation_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["video", "axis", "bin_center_deg", "count", "log_count"])
            .expect("in-memory write");
        for h in &self.orientation {
            for (axis, counts) in [("pitch", &h.pitch), ("yaw", &h.yaw), ("roll", &h.roll)] {
                for (k, c) in counts.iter().enumerate() {
                    let centre = k as i64 * 10 - 180;
                    w.write_record([
                        h.video.clone(),
                        axis.to_string(),
                        centre.to_string(),
                        c.to_string(),
                        format!("{:.6}", (1.0 + *c as f64).log10()),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
