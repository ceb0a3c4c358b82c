use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};

use super::BenchmarkError;
use crate::filtering::{compare_uniform, filter_by_overlap, FilterResult};
use crate::geometry::{pixel_ray, project, Reconstruction, RegisteredFrame, SparsePoint, TrackObservation};
use crate::overlap::OverlapScore;
use crate::recon_io::{
    orchestrate_with, write_colmap_text, OrchestrateConfig, ReconError, SfmBackend, Stage, StageContext, StageKind,
};
use crate::synthetic::{Surface, SyntheticError, SyntheticScene};

/// Deterministic stand-in for an SfM tool over a synthetic scene.
///
/// The sparse stage triangulates one point per cell of a world grid on
/// plane 0 that is visible in at least two kept frames. A point's error
/// shrinks with the widest angle between its observing rays:
/// `base_error + spread_error * exp(-parallax_deg / parallax_scale_deg)`.
/// The register stage registers every frame that sees at least
/// `min_register_points` sparse points.
#[derive(Debug, Clone)]
pub struct ScriptedSfm<'a> {
    pub scene: &'a SyntheticScene,
    pub spacing: f64,
    pub min_register_points: usize,
    pub base_error: f64,
    pub spread_error: f64,
    pub parallax_scale_deg: f64,
    index: HashMap<String, usize>,
}

impl<'a> ScriptedSfm<'a> {
    pub fn new(scene: &'a SyntheticScene) -> Self {
        ScriptedSfm {
            scene,
            spacing: 0.05,
            min_register_points: 30,
            base_error: 0.4,
            spread_error: 1.0,
            parallax_scale_deg: 2.0,
            index: (0..scene.len()).map(|i| (scene.frame_name(i), i)).collect(),
        }
    }

    fn frames_in(&self, list: &Path) -> Result<Vec<usize>, ReconError> {
        let text = std::fs::read_to_string(list).map_err(|e| ReconError::Io {
            path: list.to_path_buf(),
            source: e,
        })?;
        text.lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                self.index
                    .get(l)
                    .copied()
                    .ok_or_else(|| ReconError::Dangling(format!("frame {l:?} is not part of the scene")))
            })
            .collect()
    }

    /// Grid cells of plane 0 whose centres frame `i` sees unoccluded.
    fn visible_cells(&self, i: usize) -> Result<Vec<((i64, i64), Point2<f64>)>, SyntheticError> {
        let scene = self.scene;
        let plane = &scene.planes[0];
        let pose = &scene.trajectory[i];
        let (w, h) = (scene.width() as f64, scene.height() as f64);
        let n = plane.normal();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for corner in [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)] {
            let (o, d) = pixel_ray(&Point2::new(corner.0, corner.1), pose, &scene.camera)?;
            let denom = n.dot(&d);
            let t = n.dot(&(plane.origin - o)) / denom;
            if !(t > 0.0) || denom.abs() < 1e-12 {
                // The footprint is unbounded; this scripted model does not
                // handle views grazing the plane.
                return Err(SyntheticError::InvalidScene(format!(
                    "frame {i} does not face plane 0 fully"
                )));
            }
            let (s, v) = plane.coords(&(o + d * t));
            lo = [lo[0].min(s), lo[1].min(v)];
            hi = [hi[0].max(s), hi[1].max(v)];
        }
        let cell = |x: f64| (x / self.spacing).floor() as i64;
        let mut out = Vec::new();
        for cu in cell(lo[0])..=cell(hi[0]) {
            for cv in cell(lo[1])..=cell(hi[1]) {
                let p = self.cell_centre(cu, cv);
                let (s, t) = plane.coords(&p);
                if !plane.contains_coords(s, t) {
                    continue;
                }
                let Ok(proj) = project(&p, pose, &scene.camera) else {
                    continue;
                };
                if !scene.camera.contains(&proj.pixel) {
                    continue;
                }
                if matches!(scene.surface_at(i, &proj.pixel), Some((Surface::Plane(0), _))) {
                    out.push(((cu, cv), proj.pixel));
                }
            }
        }
        Ok(out)
    }

    fn cell_centre(&self, cu: i64, cv: i64) -> Point3<f64> {
        let plane = &self.scene.planes[0];
        let (su, sv) = ((cu as f64 + 0.5) * self.spacing, (cv as f64 + 0.5) * self.spacing);
        plane.origin + plane.u_axis * su + plane.v_axis * sv
    }

    fn point_error(&self, position: &Point3<f64>, observers: &[usize]) -> f64 {
        let rays: Vec<_> = observers
            .iter()
            .map(|&i| (position - self.scene.trajectory[i].center()).normalize())
            .collect();
        let mut widest: f64 = 0.0;
        for (a, ra) in rays.iter().enumerate() {
            for rb in &rays[a + 1..] {
                widest = widest.max(ra.dot(rb).clamp(-1.0, 1.0).acos());
            }
        }
        self.base_error + self.spread_error * (-widest.to_degrees() / self.parallax_scale_deg).exp()
    }

    fn frame(&self, i: usize) -> RegisteredFrame {
        RegisteredFrame::new(i as u32 + 1, self.scene.frame_name(i), 1, self.scene.trajectory[i])
            .with_timestamp(i as f64 / self.scene.fps)
    }

    fn model(&self, frames: &[usize], points: Vec<SparsePoint>) -> Reconstruction {
        let mut recon = Reconstruction {
            frames: frames.iter().map(|&i| self.frame(i)).collect(),
            points,
            total_frame_count: frames.len(),
            ..Default::default()
        };
        recon.cameras.insert(1, self.scene.camera.clone());
        recon
    }

    /// The sparse model the scripted tool builds from `kept`.
    pub fn sparse_model(&self, kept: &[usize]) -> Result<Reconstruction, SyntheticError> {
        let mut tracks: BTreeMap<(i64, i64), Vec<(usize, Point2<f64>)>> = BTreeMap::new();
        for &i in kept {
            for (cell, px) in self.visible_cells(i)? {
                tracks.entry(cell).or_default().push((i, px));
            }
        }
        let mut points = Vec::new();
        for ((cu, cv), obs) in tracks {
            if obs.len() < 2 {
                continue;
            }
            let position = self.cell_centre(cu, cv);
            let observers: Vec<usize> = obs.iter().map(|o| o.0).collect();
            let mut p = SparsePoint::new(points.len() as u64 + 1, position);
            p.error = self.point_error(&position, &observers);
            p.track = obs
                .into_iter()
                .map(|(i, pixel)| TrackObservation {
                    frame: self.scene.frame_name(i),
                    pixel,
                })
                .collect();
            points.push(p);
        }
        Ok(self.model(kept, points))
    }

    /// Frames of `candidates` that see enough points of `sparse`.
    pub fn register(&self, sparse: &Reconstruction, candidates: &[usize]) -> Result<Vec<usize>, SyntheticError> {
        let mut out = Vec::new();
        for &i in candidates {
            let pose = &self.scene.trajectory[i];
            let mut seen = 0;
            for p in &sparse.points {
                if let Ok(proj) = project(&p.position, pose, &self.scene.camera) {
                    if self.scene.camera.contains(&proj.pixel) {
                        seen += 1;
                        if seen >= self.min_register_points {
                            out.push(i);
                            break;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn scripted_failure(kind: StageKind, e: impl ToString) -> ReconError {
    ReconError::Tool {
        stage: kind.name().to_string(),
        status: "scripted".to_string(),
        stderr: e.to_string(),
    }
}

impl SfmBackend for ScriptedSfm<'_> {
    fn run(&self, ctx: &StageContext) -> Result<(), ReconError> {
        let listed = self.frames_in(&ctx.image_list)?;
        let model = match ctx.kind {
            StageKind::Sparse => self.sparse_model(&listed).map_err(|e| scripted_failure(ctx.kind, e))?,
            StageKind::Register => {
                let sparse = crate::recon_io::read_colmap_text(&ctx.sparse_dir)?;
                let registered = self
                    .register(&sparse, &listed)
                    .map_err(|e| scripted_failure(ctx.kind, e))?;
                let names: std::collections::HashSet<String> =
                    registered.iter().map(|&i| self.scene.frame_name(i)).collect();
                let points = sparse
                    .points
                    .into_iter()
                    .filter_map(|mut p| {
                        p.track.retain(|o| names.contains(&o.frame));
                        (p.track.len() >= 2).then_some(p)
                    })
                    .collect();
                self.model(&registered, points)
            }
        };
        write_colmap_text(&model, &ctx.output_dir)
    }
}

/// Result of one sampler on one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub kept: usize,
    pub points: usize,
    /// Mean stored point error in pixels; `None` without points.
    pub mean_error: Option<f64>,
    pub success: bool,
    pub registration_rate: f64,
}

impl StudyOutcome {
    fn from_run(kept: usize, stage: &Stage, recon: &Reconstruction) -> Self {
        let total = recon.total_frame_count;
        StudyOutcome {
            kept,
            points: recon.points.len(),
            mean_error: recon.stored_mean_error().ok(),
            success: *stage == Stage::Accepted,
            registration_rate: if total == 0 {
                0.0
            } else {
                recon.registered_count() as f64 / total as f64
            },
        }
    }
}

/// Homography filter and uniform sampling on the same video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub video: String,
    pub ours: StudyOutcome,
    pub uniform: StudyOutcome,
}

fn exact_overlap(scene: &SyntheticScene) -> impl FnMut(usize, usize) -> Result<OverlapScore, ReconError> + '_ {
    move |i, j| {
        let r = scene
            .analytic_overlap(i, j)
            .map_err(|e| ReconError::Config(e.to_string()))?;
        Ok(OverlapScore {
            r_tilde: r,
            inlier_count: usize::MAX,
            matched_count: usize::MAX,
        })
    }
}

/// Runs the full pipeline on `scene` twice, once with the homography filter
/// (using exact overlaps) and once with uniform sampling of the same number
/// of frames per attempt. Each run gets its own subdirectory of `workdir`.
pub fn filtering_study_video(
    scene: &SyntheticScene,
    backend: &ScriptedSfm<'_>,
    config: &OrchestrateConfig,
    workdir: &Path,
) -> Result<StudyRow, BenchmarkError> {
    let n = scene.len();
    let mut ours_kept = 0;
    let ours_cfg = OrchestrateConfig {
        workdir: workdir.join("homography"),
        ..config.clone()
    };
    let (ours_state, ours_recon) = orchestrate_with(scene, workdir, backend, &ours_cfg, &mut |_, cfg| {
        let r = filter_by_overlap(n, cfg, exact_overlap(scene))?;
        ours_kept = r.kept.len();
        Ok(r)
    })?;
    if ours_kept == 0 {
        // Resumed run: recover the count from the last attempt's file.
        ours_kept = read_kept(&ours_cfg.workdir, ours_state.attempt)?;
    }

    let mut uniform_kept = 0;
    let uniform_cfg = OrchestrateConfig {
        workdir: workdir.join("uniform"),
        ..config.clone()
    };
    let (uniform_state, uniform_recon) = orchestrate_with(scene, workdir, backend, &uniform_cfg, &mut |_, cfg| {
        let budget = filter_by_overlap(n, cfg, exact_overlap(scene))?.kept.len();
        let r: FilterResult = compare_uniform(n, budget.max(1));
        uniform_kept = r.kept.len();
        Ok(r)
    })?;
    if uniform_kept == 0 {
        uniform_kept = read_kept(&uniform_cfg.workdir, uniform_state.attempt)?;
    }

    Ok(StudyRow {
        video: scene.name.clone(),
        ours: StudyOutcome::from_run(ours_kept, &ours_state.stage, &ours_recon),
        uniform: StudyOutcome::from_run(uniform_kept, &uniform_state.stage, &uniform_recon),
    })
}

fn read_kept(workdir: &Path, attempt: u32) -> Result<usize, BenchmarkError> {
    let layout = crate::recon_io::WorkdirLayout::new(workdir);
    let path = layout.kept_frames(attempt.max(1));
    let text = std::fs::read_to_string(&path).map_err(|e| BenchmarkError::File {
        path,
        message: e.to_string(),
    })?;
    Ok(text.lines().filter(|l| !l.is_empty()).count())
}

/// `(uniform - ours) / ours`; `None` when `ours` is zero.
pub fn relative_change(ours: f64, uniform: f64) -> Option<f64> {
    (ours != 0.0).then(|| (uniform - ours) / ours)
}

/// Totals of one sampler over all videos.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    /// Mean number of points per video.
    pub points: f64,
    /// Mean of the per-video mean errors.
    pub mean_error: f64,
    pub successes: usize,
    pub videos: usize,
}

impl SamplerSummary {
    fn of<'r>(outcomes: impl Iterator<Item = &'r StudyOutcome>) -> Self {
        let (mut points, mut errors, mut n_err, mut successes, mut videos) = (0.0, 0.0, 0usize, 0, 0);
        for o in outcomes {
            points += o.points as f64;
            if let Some(e) = o.mean_error {
                errors += e;
                n_err += 1;
            }
            successes += o.success as usize;
            videos += 1;
        }
        SamplerSummary {
            points: if videos == 0 { 0.0 } else { points / videos as f64 },
            mean_error: if n_err == 0 { f64::NAN } else { errors / n_err as f64 },
            successes,
            videos,
        }
    }
}

/// Comparison table across videos.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn ours(&self) -> SamplerSummary {
        SamplerSummary::of(self.rows.iter().map(|r| &r.ours))
    }

    pub fn uniform(&self) -> SamplerSummary {
        SamplerSummary::of(self.rows.iter().map(|r| &r.uniform))
    }

    /// Relative changes of points, error and successes, uniform against ours.
    pub fn relative_changes(&self) -> [Option<f64>; 3] {
        Self::changes(&self.ours(), &self.uniform())
    }

    fn changes(ours: &SamplerSummary, uniform: &SamplerSummary) -> [Option<f64>; 3] {
        [
            relative_change(ours.points, uniform.points),
            relative_change(ours.mean_error, uniform.mean_error),
            relative_change(ours.successes as f64, uniform.successes as f64),
        ]
    }

    /// Markdown table with one row per sampler and a relative-change row.
    pub fn to_markdown(&self) -> String {
        format_table(&self.ours(), &self.uniform())
    }

    /// Per-video CSV.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "video",
            "sampler",
            "kept",
            "points",
            "mean_error",
            "success",
            "registration_rate",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            for (name, o) in [("homography", &r.ours), ("uniform", &r.uniform)] {
                w.write_record([
                    r.video.clone(),
                    name.to_string(),
                    o.kept.to_string(),
                    o.points.to_string(),
                    o.mean_error.map(|e| e.to_string()).unwrap_or_default(),
                    o.success.to_string(),
                    o.registration_rate.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn percent(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x))
        .unwrap_or_else(|| "n/a".to_string())
}

fn format_table(ours: &SamplerSummary, uniform: &SamplerSummary) -> String {
    let [dp, de, ds] = StudyTable::changes(ours, uniform);
    let row = |name: &str, s: &SamplerSummary| {
        format!(
            "| {name} | {:.0} | {:.4} | {}/{} |\n",
            s.points, s.mean_error, s.successes, s.videos
        )
    };
    let mut out = String::from("| Sampling | #points | Reproj. error | Success |\n|---|---|---|---|\n");
    out.push_str(&row("Homography-based", ours));
    out.push_str(&row("Uniformly", uniform));
    out.push_str(&format!(
        "| Relative change | {} | {} | {} |\n",
        percent(dp),
        percent(de),
        percent(ds)
    ));
    out
}
