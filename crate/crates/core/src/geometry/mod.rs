//! Camera models, rigid poses, projection and rotation statistics.
//!
//! Poses map world coordinates to camera coordinates, as in COLMAP model
//! files: `x_cam = R * x_world + t`. Mixing this up with camera-to-world
//! poses is the most common integration mistake, so the camera centre is
//! only ever obtained through [`RigidPose::center`].

mod camera;
mod pose;
mod reconstruction;
mod rotation;

use thiserror::Error;

pub use camera::{CameraIntrinsics, CameraModel, UNDISTORT_MAX_ITERATIONS, UNDISTORT_TOLERANCE_PX};
pub use pose::{RigidPose, QUATERNION_NORM_TOLERANCE};
pub use reconstruction::{
    backproject, mean_reprojection_error, pixel_ray, project, Projection, Reconstruction, RegisteredFrame, SparsePoint,
    TrackObservation,
};
pub use rotation::{mean_rotation, relative_orientation, Orientation};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("unsupported camera model {0:?}")]
    UnsupportedModel(String),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("undistortion did not converge within {iterations} iterations")]
    UndistortionDiverged { iterations: usize },
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("invalid reconstruction: {0}")]
    InvalidReconstruction(String),
}
