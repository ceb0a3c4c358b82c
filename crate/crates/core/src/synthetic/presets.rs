use std::f64::consts::PI;

use nalgebra::{Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{SceneObject, SyntheticError, SyntheticScene, TexturedPlane, ValueNoise};
use crate::geometry::{CameraIntrinsics, RigidPose};

pub const WIDTH: u32 = 456;
pub const HEIGHT: u32 = 256;
pub const FOCAL: f64 = 300.0;
/// Distance from the camera path to the wall in the filtering presets.
pub const WALL_DEPTH: f64 = 3.0;

pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics::pinhole(WIDTH, HEIGHT, FOCAL, FOCAL, WIDTH as f64 / 2.0, HEIGHT as f64 / 2.0)
        .expect("valid default intrinsics")
}

fn wall(depth: f64, seed: u64) -> TexturedPlane {
    TexturedPlane::unbounded(
        Point3::new(0.0, 0.0, depth),
        Vector3::x(),
        Vector3::y(),
        ValueNoise::new(seed, 0.25, 4),
    )
}

/// Camera looking along +z from `(x, y, 0)` with a small roll.
fn facing_wall(x: f64, y: f64, roll: f64) -> RigidPose {
    let r = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll);
    RigidPose::from_center(r, Point3::new(x, y, 0.0))
}

fn scene(
    name: &str,
    planes: Vec<TexturedPlane>,
    objects: Vec<SceneObject>,
    trajectory: Vec<RigidPose>,
) -> SyntheticScene {
    SyntheticScene {
        name: name.to_string(),
        camera: default_camera(),
        fps: 30.0,
        background: 0.5,
        planes,
        objects,
        trajectory,
    }
}

/// Pixels at wall depth to world units.
fn px_to_world(px: f64) -> f64 {
    px * WALL_DEPTH / FOCAL
}

/// `n` frames from a static camera.
pub fn identical(n: usize, seed: u64) -> SyntheticScene {
    scene(
        "identical",
        vec![wall(WALL_DEPTH, seed)],
        vec![],
        vec![facing_wall(0.0, 0.0, 0.0); n],
    )
}

/// Two static segments of `n1` and `n2` frames viewing disjoint parts of the
/// wall.
pub fn abrupt_cut(n1: usize, n2: usize, seed: u64) -> SyntheticScene {
    let mut t = vec![facing_wall(0.0, 0.0, 0.0); n1];
    t.extend(vec![facing_wall(40.0, 3.0, 0.0); n2]);
    scene("abrupt_cut", vec![wall(WALL_DEPTH, seed)], vec![], t)
}

/// Horizontal truck along the wall at a constant per-frame image shift
/// chosen so that the overlap with a window's first frame drops below 0.9
/// exactly `k` frames later.
pub fn panning(n: usize, k: usize, seed: u64) -> SyntheticScene {
    assert!(k >= 2, "window length must be at least 2");
    let step_px = 0.1 * WIDTH as f64 / (k as f64 - 0.5);
    let t = (0..n)
        .map(|i| facing_wall(px_to_world(step_px * i as f64), 0.0, 0.0))
        .collect();
    scene("panning", vec![wall(WALL_DEPTH, seed)], vec![], t)
}

/// Raised-cosine ease from 0 to 1.
fn ease(x: f64) -> f64 {
    (1.0 - (PI * x.clamp(0.0, 1.0)).cos()) / 2.0
}

/// Sub-pixel sway of a camera dwelling at one spot.
fn dwell_pose(x0: f64, i: usize, phase: f64) -> RigidPose {
    let f = i as f64 + phase;
    facing_wall(
        x0 + px_to_world(0.8 * (0.21 * f).sin()),
        px_to_world(0.6 * (0.13 * f).cos()),
        0.002 * (0.17 * f).sin(),
    )
}

/// Hot-spot dwell, fast transition, hot-spot dwell.
///
/// The transition is two eased pan legs of `leg_frames` frames, each moving
/// `leg_px` image pixels. Frame-to-frame overlap stays above 0.9 in the dwell
/// segments and where the legs meet, and drops below it in the middle of each
/// leg.
pub fn hot_spot_with(dwell: usize, leg_frames: usize, leg_px: f64, seed: u64) -> SyntheticScene {
    let mut t = Vec::with_capacity(2 * dwell + 2 * leg_frames);
    for i in 0..dwell {
        t.push(dwell_pose(0.0, i, 0.0));
    }
    let leg = px_to_world(leg_px);
    for leg_index in 0..2 {
        for m in 0..leg_frames {
            let x = leg * (leg_index as f64 + ease((m + 1) as f64 / leg_frames as f64));
            t.push(facing_wall(x, 0.0, 0.0));
        }
    }
    for i in 0..dwell {
        t.push(dwell_pose(2.0 * leg, i, 50.0));
    }
    scene("hot_spot", vec![wall(WALL_DEPTH, seed)], vec![], t)
}

/// 100 dwell frames, 20 transition frames, 100 dwell frames.
pub fn hot_spot(seed: u64) -> SyntheticScene {
    hot_spot_with(100, 10, 1000.0, seed)
}

/// Long dwells at a few hot spots joined by quick pans, with the spot
/// durations drawn from `seed`.
pub fn skewed(seed: u64) -> SyntheticScene {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let spots = 4;
    let mut t = Vec::new();
    let mut x = 0.0;
    let mut y = 0.0;
    for s in 0..spots {
        let dwell = rng.random_range(120..220);
        let phase = rng.random_range(0.0..100.0);
        for i in 0..dwell {
            let p = dwell_pose(x, i, phase);
            t.push(RigidPose::from_center(
                *p.rotation(),
                p.center() + Vector3::new(0.0, y, 0.0),
            ));
        }
        if s + 1 < spots {
            let frames = rng.random_range(20..35);
            let dx = px_to_world(rng.random_range(700.0..1100.0));
            let dy = px_to_world(rng.random_range(-150.0..150.0));
            for m in 0..frames {
                let e = ease((m + 1) as f64 / frames as f64);
                t.push(facing_wall(x + dx * e, y + dy * e, 0.0));
            }
            x += dx;
            y += dy;
        }
    }
    scene("skewed", vec![wall(WALL_DEPTH, seed)], vec![], t)
}

fn object_patch(id: u32, center: Point3<f64>, half: [f64; 2], seed: u64) -> SceneObject {
    SceneObject {
        id,
        surface: TexturedPlane {
            origin: center,
            u_axis: Vector3::x(),
            v_axis: Vector3::y(),
            half_extent: Some(half),
            texture: ValueNoise {
                contrast: 2.4,
                ..ValueNoise::new(seed.wrapping_add(1000), 0.08, 3)
            },
        },
        velocity: Vector3::zeros(),
    }
}

/// Static planar object in front of a wall, seen by a camera translating
/// sideways over `n` frames.
pub fn vos_static(n: usize, seed: u64) -> SyntheticScene {
    let objects = vec![object_patch(1, Point3::new(0.0, 0.0, 2.5), [0.3, 0.25], seed)];
    let t = (0..n)
        .map(|i| {
            let s = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            RigidPose::from_center(
                UnitQuaternion::identity(),
                Point3::new(-0.5 + 1.5 * s, 0.1 * (PI * s).sin(), 0.0),
            )
        })
        .collect();
    scene("vos_static", vec![wall(4.0, seed)], objects, t)
}

/// Like [`vos_static`] but the camera yaws away until the object leaves the
/// view, then turns back.
pub fn vos_leaving(n: usize, seed: u64) -> SyntheticScene {
    let objects = vec![object_patch(1, Point3::new(0.0, 0.0, 2.5), [0.3, 0.25], seed)];
    let t = (0..n)
        .map(|i| {
            let s = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let yaw = 100f64.to_radians() * (PI * s).sin();
            RigidPose::from_center(
                UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -yaw),
                Point3::new(0.2 * s, 0.0, 0.0),
            )
        })
        .collect();
    let planes = vec![
        wall(4.0, seed),
        TexturedPlane::unbounded(
            Point3::new(4.0, 0.0, 0.0),
            Vector3::z(),
            -Vector3::y(),
            ValueNoise::new(seed + 7, 0.25, 4),
        ),
    ];
    scene("vos_leaving", planes, objects, t)
}

/// A named preset with its parameters, as stored in preset JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    Identical { frames: usize, seed: u64 },
    AbruptCut { first: usize, second: usize, seed: u64 },
    Panning { frames: usize, window: usize, seed: u64 },
    HotSpot { seed: u64 },
    Skewed { seed: u64 },
    VosStatic { frames: usize, seed: u64 },
    VosLeaving { frames: usize, seed: u64 },
}

impl Preset {
    pub fn build(&self) -> Result<SyntheticScene, SyntheticError> {
        let s = match *self {
            Preset::Identical { frames, seed } => identical(frames, seed),
            Preset::AbruptCut { first, second, seed } => abrupt_cut(first, second, seed),
            Preset::Panning { frames, window, seed } => {
                if window < 2 {
                    return Err(SyntheticError::InvalidScene("panning window must be at least 2".into()));
                }
                panning(frames, window, seed)
            }
            Preset::HotSpot { seed } => hot_spot(seed),
            Preset::Skewed { seed } => skewed(seed),
            Preset::VosStatic { frames, seed } => vos_static(frames, seed),
            Preset::VosLeaving { frames, seed } => vos_leaving(frames, seed),
        };
        s.validate()?;
        Ok(s)
    }
}
