use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::{Point2, Point3, Vector2};
use serde::{Deserialize, Serialize};

use super::{CameraIntrinsics, GeometryError, RigidPose};

/// A point projected into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Point2<f64>,
    /// Camera-frame z of the point.
    pub depth: f64,
}

/// Projects a world point into the image of a camera at `pose`.
///
/// Points with non-positive depth produce [`GeometryError::BehindCamera`].
/// Points in front of the camera but outside the image are returned
/// normally; callers check bounds with [`CameraIntrinsics::contains`].
pub fn project(point: &Point3<f64>, pose: &RigidPose, intr: &CameraIntrinsics) -> Result<Projection, GeometryError> {
    let pc = pose.transform_point(point);
    if pc.z <= 0.0 {
        return Err(GeometryError::BehindCamera { depth: pc.z });
    }
    let n = Vector2::new(pc.x / pc.z, pc.y / pc.z);
    Ok(Projection {
        pixel: intr.normalized_to_pixel(n),
        depth: pc.z,
    })
}

/// Lifts a pixel at camera-frame depth `depth` back into world coordinates.
pub fn backproject(
    pixel: &Point2<f64>,
    depth: f64,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
) -> Result<Point3<f64>, GeometryError> {
    if !(depth > 0.0) {
        return Err(GeometryError::BehindCamera { depth });
    }
    let n = intr.pixel_to_normalized(pixel)?;
    let pc = Point3::new(n.x * depth, n.y * depth, depth);
    Ok(pose.inverse_transform_point(&pc))
}

/// Viewing ray through a pixel: origin (camera centre) and unit direction in
/// world coordinates.
pub fn pixel_ray(
    pixel: &Point2<f64>,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
) -> Result<(Point3<f64>, nalgebra::Vector3<f64>), GeometryError> {
    let n = intr.pixel_to_normalized(pixel)?;
    let dir_cam = nalgebra::Vector3::new(n.x, n.y, 1.0).normalize();
    Ok((pose.center(), pose.rotation().inverse() * dir_cam))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredFrame {
    /// Image id used in COLMAP files.
    pub id: u32,
    pub name: String,
    /// Seconds from the start of the video.
    pub timestamp: f64,
    pub camera_id: u32,
    pub pose: RigidPose,
    /// Detected 2D points with no associated 3D point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub untracked: Vec<Point2<f64>>,
}

impl RegisteredFrame {
    pub fn new(id: u32, name: impl Into<String>, camera_id: u32, pose: RigidPose) -> Self {
        RegisteredFrame {
            id,
            name: name.into(),
            timestamp: 0.0,
            camera_id,
            pose,
            untracked: Vec::new(),
        }
    }

    pub fn with_timestamp(mut self, t: f64) -> Self {
        self.timestamp = t;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackObservation {
    pub frame: String,
    pub pixel: Point2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePoint {
    pub id: u64,
    pub position: Point3<f64>,
    pub color: Option<[u8; 3]>,
    /// Stored reprojection error in pixels.
    pub error: f64,
    pub track: Vec<TrackObservation>,
}

impl SparsePoint {
    pub fn new(id: u64, position: Point3<f64>) -> Self {
        SparsePoint {
            id,
            position,
            color: None,
            error: 0.0,
            track: Vec::new(),
        }
    }
}

/// A sparse model plus registration bookkeeping for one video.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Reconstruction {
    pub cameras: BTreeMap<u32, CameraIntrinsics>,
    pub frames: Vec<RegisteredFrame>,
    pub points: Vec<SparsePoint>,
    /// Frames in the source video, registered or not.
    pub total_frame_count: usize,
}

impl Reconstruction {
    pub fn registered_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, name: &str) -> Option<&RegisteredFrame> {
        self.frames.iter().find(|f| f.name == name)
    }

    pub fn camera_of(&self, frame: &RegisteredFrame) -> Result<&CameraIntrinsics, GeometryError> {
        self.cameras.get(&frame.camera_id).ok_or_else(|| {
            GeometryError::DanglingReference(format!("camera {} of frame {}", frame.camera_id, frame.name))
        })
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.frames.len() > self.total_frame_count {
            return Err(GeometryError::InvalidReconstruction(format!(
                "{} registered frames exceed total frame count {}",
                self.frames.len(),
                self.total_frame_count
            )));
        }
        let mut names = HashSet::new();
        for f in &self.frames {
            if !names.insert(f.name.as_str()) {
                return Err(GeometryError::InvalidReconstruction(format!(
                    "duplicate frame name {}",
                    f.name
                )));
            }
            if !(f.timestamp >= 0.0) {
                return Err(GeometryError::InvalidReconstruction(format!(
                    "negative timestamp on {}",
                    f.name
                )));
            }
            self.camera_of(f)?;
        }
        for p in &self.points {
            if !(p.error >= 0.0) {
                return Err(GeometryError::InvalidReconstruction(format!(
                    "point {} has negative error",
                    p.id
                )));
            }
            for obs in &p.track {
                if !names.contains(obs.frame.as_str()) {
                    return Err(GeometryError::DanglingReference(format!(
                        "point {} observed in unknown frame {}",
                        p.id, obs.frame
                    )));
                }
            }
        }
        Ok(())
    }

    /// Assigns timestamps from the trailing integer in each frame name
    /// (`frame_0000000123.jpg` is frame 123) at `fps` frames per second.
    /// Frame numbers are taken as 1-based when the smallest is 1.
    pub fn assign_timestamps_from_names(&mut self, fps: f64) -> Result<(), GeometryError> {
        let indices: Vec<u64> = self
            .frames
            .iter()
            .map(|f| {
                frame_number(&f.name)
                    .ok_or_else(|| GeometryError::InvalidReconstruction(format!("no frame number in {}", f.name)))
            })
            .collect::<Result<_, _>>()?;
        let base = indices.iter().copied().min().map(|m| m.min(1)).unwrap_or(0);
        for (f, idx) in self.frames.iter_mut().zip(indices) {
            f.timestamp = (idx - base) as f64 / fps;
        }
        Ok(())
    }

    /// Per-observation reprojection errors recomputed from the tracks.
    pub fn reprojection_errors(&self) -> Result<Vec<f64>, GeometryError> {
        let frames: HashMap<&str, &RegisteredFrame> = self.frames.iter().map(|f| (f.name.as_str(), f)).collect();
        let mut errs = Vec::new();
        for p in &self.points {
            for obs in &p.track {
                let frame = frames
                    .get(obs.frame.as_str())
                    .ok_or_else(|| GeometryError::DanglingReference(format!("frame {}", obs.frame)))?;
                let cam = self.camera_of(frame)?;
                let proj = project(&p.position, &frame.pose, cam)?;
                errs.push((proj.pixel - obs.pixel).norm());
            }
        }
        Ok(errs)
    }

    /// Mean of the stored per-point errors.
    pub fn stored_mean_error(&self) -> Result<f64, GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::EmptyInput("stored_mean_error"));
        }
        Ok(self.points.iter().map(|p| p.error).sum::<f64>() / self.points.len() as f64)
    }
}

/// Mean reprojection error over every (point, observation) pair.
pub fn mean_reprojection_error(recon: &Reconstruction) -> Result<f64, GeometryError> {
    let errs = recon.reprojection_errors()?;
    if errs.is_empty() {
        return Err(GeometryError::EmptyInput("mean_reprojection_error"));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

pub(crate) fn frame_number(name: &str) -> Option<u64> {
    let stem = name.rsplit('/').next().unwrap_or(name);
    let stem = stem.split('.').next().unwrap_or(stem);
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}
