#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;
use std::path::Path;

use egofields::geometry::{
    CameraIntrinsics, CameraModel, Reconstruction, RegisteredFrame, RigidPose, SparsePoint, TrackObservation,
};
use egofields::recon_io::{write_colmap_text, ReconError, SfmBackend, StageContext, StageKind};
use nalgebra::{Point2, Point3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_camera(rng: &mut ChaCha8Rng) -> CameraIntrinsics {
    let (w, h) = (rng.random_range(32..2000), rng.random_range(32..2000));
    let f = rng.random_range(50.0..3000.0);
    let (cx, cy) = (
        w as f64 * rng.random_range(0.3..0.7),
        h as f64 * rng.random_range(0.3..0.7),
    );
    match rng.random_range(0..4) {
        0 => CameraIntrinsics::simple_pinhole(w, h, f, cx, cy),
        1 => CameraIntrinsics::pinhole(w, h, f, f * rng.random_range(0.9..1.1), cx, cy),
        2 => CameraIntrinsics::simple_radial(w, h, f, cx, cy, rng.random_range(-0.2..0.2)),
        _ => {
            let mut p = vec![f, f * 1.01, cx, cy];
            p.extend((0..4).map(|_| rng.random_range(-0.05..0.05)));
            CameraIntrinsics::new(CameraModel::OpenCv, w, h, p)
        }
    }
    .unwrap()
}

fn random_pose(rng: &mut ChaCha8Rng) -> RigidPose {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let q = UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..3.0));
    let t = Vector3::new(
        rng.random_range(-50.0..50.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-1e3..1e3),
    );
    RigidPose::new(q, t)
}

/// A structurally valid reconstruction with random content. With
/// `single_camera` every frame uses camera 1.
pub fn random_reconstruction(seed: u64, single_camera: bool) -> Reconstruction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cams = if single_camera { 1 } else { rng.random_range(1..4) };
    let cameras: BTreeMap<u32, CameraIntrinsics> = (0..n_cams)
        .map(|k| (k as u32 * 3 + 1, random_camera(&mut rng)))
        .collect();
    let cam_ids: Vec<u32> = cameras.keys().copied().collect();
    let n_frames = rng.random_range(1..12);
    let frames: Vec<RegisteredFrame> = (0..n_frames)
        .map(|k| {
            let name = if k % 4 == 3 {
                format!("dir/frame {k:04}.jpg")
            } else {
                format!("frame_{k:010}.png")
            };
            let mut f = RegisteredFrame::new(
                100 + 7 * k as u32,
                name,
                cam_ids[rng.random_range(0..cam_ids.len())],
                random_pose(&mut rng),
            );
            f.untracked = (0..rng.random_range(0..4))
                .map(|_| Point2::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0)))
                .collect();
            f
        })
        .collect();
    let points = (0..rng.random_range(0..20))
        .map(|k| {
            let mut p = SparsePoint::new(
                5 + 2 * k as u64,
                Point3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-1e4..1e4),
                ),
            );
            p.color = Some([rng.random(), rng.random(), rng.random()]);
            p.error = rng.random_range(0.0..3.0);
            p.track = (0..rng.random_range(0..5))
                .map(|_| TrackObservation {
                    frame: frames[rng.random_range(0..frames.len())].name.clone(),
                    pixel: Point2::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0)),
                })
                .collect();
            p
        })
        .collect();
    let total_frame_count = n_frames + rng.random_range(0..5);
    let recon = Reconstruction {
        cameras,
        frames,
        points,
        total_frame_count,
    };
    recon.validate().unwrap();
    recon
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn close_all(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y))
}

pub fn same_pose(a: &RigidPose, b: &RigidPose) -> bool {
    close_all(&a.quaternion_components(), &b.quaternion_components())
        && close_all(&a.translation_components(), &b.translation_components())
}

/// Field-by-field comparison at 1e-9 relative tolerance. Timestamps are
/// ignored since neither file format stores them.
pub fn recon_close(a: &Reconstruction, b: &Reconstruction) -> Result<(), String> {
    if a.total_frame_count != b.total_frame_count {
        return Err(format!("total {} vs {}", a.total_frame_count, b.total_frame_count));
    }
    if a.cameras.len() != b.cameras.len() {
        return Err("camera count".into());
    }
    for ((ia, ca), (ib, cb)) in a.cameras.iter().zip(&b.cameras) {
        if ia != ib
            || ca.model() != cb.model()
            || ca.width() != cb.width()
            || ca.height() != cb.height()
            || !close_all(ca.params(), cb.params())
        {
            return Err(format!("camera {ia}"));
        }
    }
    if a.frames.len() != b.frames.len() {
        return Err("frame count".into());
    }
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        if fa.id != fb.id || fa.name != fb.name || fa.camera_id != fb.camera_id || !same_pose(&fa.pose, &fb.pose) {
            return Err(format!("frame {}", fa.name));
        }
        if fa.untracked.len() != fb.untracked.len()
            || fa
                .untracked
                .iter()
                .zip(&fb.untracked)
                .any(|(p, q)| !close(p.x, q.x) || !close(p.y, q.y))
        {
            return Err(format!("untracked points of {}", fa.name));
        }
    }
    if a.points.len() != b.points.len() {
        return Err("point count".into());
    }
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if pa.id != pb.id
            || !close_all(pa.position.coords.as_slice(), pb.position.coords.as_slice())
            || pa.color != pb.color
            || !close(pa.error, pb.error)
            || pa.track.len() != pb.track.len()
        {
            return Err(format!("point {}", pa.id));
        }
        for (ta, tb) in pa.track.iter().zip(&pb.track) {
            if ta.frame != tb.frame || !close(ta.pixel.x, tb.pixel.x) || !close(ta.pixel.y, tb.pixel.y) {
                return Err(format!("track of point {}", pa.id));
            }
        }
    }
    Ok(())
}

/// Scripted SfM: the sparse stage writes a one-camera model of the kept
/// frames, and the register stage registers the first
/// `round(rate * n)` frames of the full list, with `rate` taken per attempt.
pub struct MockSfm {
    pub rates: Vec<f64>,
    pub calls: std::sync::Mutex<Vec<(StageKind, u32)>>,
}

impl MockSfm {
    pub fn new(rates: &[f64]) -> Self {
        MockSfm {
            rates: rates.to_vec(),
            calls: Default::default(),
        }
    }

    pub fn calls(&self) -> Vec<(StageKind, u32)> {
        self.calls.lock().unwrap().clone()
    }
}

fn model_of(names: &[String]) -> Reconstruction {
    let cam = CameraIntrinsics::simple_radial(456, 256, 300.0, 228.0, 128.0, 0.0).unwrap();
    Reconstruction {
        cameras: BTreeMap::from([(1, cam)]),
        frames: names
            .iter()
            .enumerate()
            .map(|(k, n)| {
                RegisteredFrame::new(
                    k as u32 + 1,
                    n.clone(),
                    1,
                    RigidPose::new(UnitQuaternion::identity(), Vector3::new(k as f64 * 0.1, 0.0, 0.0)),
                )
            })
            .collect(),
        points: Vec::new(),
        total_frame_count: names.len(),
    }
}

fn read_list(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

impl SfmBackend for MockSfm {
    fn run(&self, ctx: &StageContext) -> Result<(), ReconError> {
        self.calls.lock().unwrap().push((ctx.kind, ctx.attempt));
        let names = read_list(&ctx.image_list);
        let chosen = match ctx.kind {
            StageKind::Sparse => names,
            StageKind::Register => {
                let rate = self.rates[(ctx.attempt - 1) as usize];
                let n = (rate * names.len() as f64).round() as usize;
                names[..n].to_vec()
            }
        };
        write_colmap_text(&model_of(&chosen), &ctx.output_dir)
    }
}
