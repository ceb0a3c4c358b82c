use nalgebra::Point2;

use super::{BinaryMask, LiftedObject, PropagationConfig};
use crate::geometry::{project, CameraIntrinsics, RigidPose};

/// Result of projecting a lifted object into one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Reprojection {
    pub mask: BinaryMask,
    pub visible: bool,
    /// Fraction of mask samples landing in the frame in front of the camera.
    pub in_frame_fraction: f64,
}

/// Splats every in-frame sample of `obj` as a disk and closes the result.
/// When too few samples land in frame the object is reported as not visible
/// and the mask is empty.
pub fn reproject_object(
    obj: &LiftedObject,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
    config: &PropagationConfig,
) -> Reprojection {
    let (w, h) = (intr.width() as usize, intr.height() as usize);
    let mut mask = BinaryMask::empty(w, h, obj.object_id);
    let radius = config.effective_splat_radius();
    let reach = radius.ceil() as isize;
    let mut in_frame = 0usize;
    for p in &obj.mask_samples {
        let Ok(proj) = project(p, pose, intr) else { continue };
        if !intr.contains(&proj.pixel) {
            continue;
        }
        in_frame += 1;
        splat(&mut mask, &proj.pixel, radius, reach);
    }
    let fraction = if obj.mask_samples.is_empty() {
        0.0
    } else {
        in_frame as f64 / obj.mask_samples.len() as f64
    };
    if fraction < config.visibility_min || in_frame == 0 {
        return Reprojection {
            mask: BinaryMask::empty(w, h, obj.object_id),
            visible: false,
            in_frame_fraction: fraction,
        };
    }
    Reprojection {
        mask: mask.close3(),
        visible: true,
        in_frame_fraction: fraction,
    }
}

/// Sets every pixel whose centre lies strictly closer than `radius` to `c`.
fn splat(mask: &mut BinaryMask, c: &Point2<f64>, radius: f64, reach: isize) {
    let cx = c.x.floor() as isize;
    let cy = c.y.floor() as isize;
    let r2 = radius * radius;
    for y in cy - reach..=cy + reach {
        for x in cx - reach..=cx + reach {
            if x < 0 || y < 0 || x as usize >= mask.width() || y as usize >= mask.height() {
                continue;
            }
            let dx = x as f64 + 0.5 - c.x;
            let dy = y as f64 + 0.5 - c.y;
            if dx * dx + dy * dy < r2 {
                mask.set(x as usize, y as usize, true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splat_is_a_strict_disk() {
        let mut m = BinaryMask::empty(9, 9, 0);
        splat(&mut m, &Point2::new(4.5, 4.5), 2.0, 2);
        // Centres at distance 0, 1 and sqrt(2) qualify; distance 2 does not.
        assert_eq!(m.count(), 9);
        assert!(m.get(4, 4) && m.get(5, 5) && !m.get(6, 4));
    }
}
