//! Geometric video-object-segmentation baselines.
//!
//! [`fixed_in_2d`] repeats the reference mask. The 3D baseline lifts the
//! reference mask onto a surface fitted to the sparse points it covers
//! ([`lift_mask`]) and projects it into every other registered frame
//! ([`reproject_object`]); visibility is a frustum test only.

mod lift;
mod mask;
mod reproject;

use std::path::PathBuf;

use thiserror::Error;

use crate::features::GrayImage;
use crate::geometry::{GeometryError, Reconstruction};

pub use lift::{lift_mask, LiftSurface, LiftedObject, PropagationConfig};
pub use mask::BinaryMask;
pub use reproject::{reproject_object, Reprojection};

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("cannot access mask {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("object {object_id}: lift failed: {reason}")]
    LiftFailed { object_id: u32, reason: String },
    #[error("unknown frame {0:?}")]
    UnknownFrame(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `n` copies of the reference mask.
pub fn fixed_in_2d(reference: &BinaryMask, n: usize) -> Vec<BinaryMask> {
    vec![reference.clone(); n]
}

/// One propagated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedMask {
    pub frame: String,
    pub mask: BinaryMask,
    pub visible: bool,
}

/// Lifts `reference` from frame `reference_frame` of `recon` and reprojects
/// it into every registered frame, in model order.
pub fn propagate_fixed_3d(
    reference: &BinaryMask,
    reference_frame: &str,
    recon: &Reconstruction,
    config: &PropagationConfig,
) -> Result<Vec<PropagatedMask>, PropagationError> {
    let frame = recon
        .frame(reference_frame)
        .ok_or_else(|| PropagationError::UnknownFrame(reference_frame.to_string()))?;
    let intr = recon.camera_of(frame)?;
    let lifted = lift_mask(reference, frame, intr, &recon.points, config)?;
    recon
        .frames
        .iter()
        .map(|f| {
            let intr = recon.camera_of(f)?;
            let r = reproject_object(&lifted, &f.pose, intr, config);
            Ok(PropagatedMask {
                frame: f.name.clone(),
                mask: r.mask,
                visible: r.visible,
            })
        })
        .collect()
}

/// Grey image with mask pixels tinted, for visual inspection.
pub fn overlay(image: &GrayImage, masks: &[&BinaryMask]) -> image::RgbImage {
    const PALETTE: [[u8; 3]; 6] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
    ];
    image::RgbImage::from_fn(image.width() as u32, image.height() as u32, |x, y| {
        let g = (image.get(x as usize, y as usize).clamp(0.0, 1.0) * 255.0).round();
        let mut px = [g; 3];
        for (k, m) in masks.iter().enumerate() {
            if m.same_shape_as(image) && m.get(x as usize, y as usize) {
                let c = PALETTE[k % PALETTE.len()];
                for i in 0..3 {
                    px[i] = 0.5 * px[i] + 0.5 * c[i] as f32;
                }
            }
        }
        image::Rgb(px.map(|v| v as u8))
    })
}

impl BinaryMask {
    fn same_shape_as(&self, image: &GrayImage) -> bool {
        self.width() == image.width() && self.height() == image.height()
    }
}
