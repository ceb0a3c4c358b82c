//! Procedural planar scenes with exactly known cameras, homographies, masks
//! and sparse points, rendered deterministically.

mod output;
pub mod presets;
mod scene;
mod texture;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use output::{read_scene, write_sequence, SequenceLayout};
pub use presets::Preset;
pub use scene::{RenderedFrame, SceneObject, Surface, SyntheticScene, TexturedPlane};
pub use texture::ValueNoise;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("camera {frame} lies on scene geometry")]
    CameraInsideGeometry { frame: usize },
    #[error("frame {index} out of range for a {len}-frame scene")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
