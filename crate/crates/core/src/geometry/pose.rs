use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Largest deviation of a quaternion's norm from 1 accepted from input files.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

/// Quaternions closer to unit norm than this are stored bit-for-bit.
const UNIT_EXACT_TOLERANCE: f64 = 1e-9;

/// A rigid world-to-camera transform.
///
/// `x_cam = R * x_world + t`, the COLMAP extrinsics convention. The camera
/// centre in world coordinates is therefore `-R^T t`, not `t`.
///
/// The rotation is kept with a non-negative scalar part so that every
/// rotation has a single stored representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidPose {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

pub(crate) fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        RigidPose {
            rotation: canonical(rotation),
            translation,
        }
    }

    /// Builds a pose from raw `(qw, qx, qy, qz)` and `(tx, ty, tz)`.
    ///
    /// The quaternion must be unit within [`QUATERNION_NORM_TOLERANCE`].
    /// Values already unit within 1e-9 are kept exactly as given so that
    /// re-reading a written pose reproduces it bit-for-bit.
    pub fn from_components(q: [f64; 4], t: [f64; 3]) -> Result<Self, GeometryError> {
        if q.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite component".into()));
        }
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(GeometryError::InvalidPose(format!(
                "quaternion norm {norm} deviates from 1 by more than {QUATERNION_NORM_TOLERANCE}"
            )));
        }
        let unit = if (norm - 1.0).abs() <= UNIT_EXACT_TOLERANCE {
            UnitQuaternion::new_unchecked(quat)
        } else {
            UnitQuaternion::new_normalize(quat)
        };
        Ok(RigidPose::new(unit, Vector3::new(t[0], t[1], t[2])))
    }

    /// Pose of a camera centred at `center` (world) with world-to-camera
    /// rotation `rotation`.
    pub fn from_center(rotation: UnitQuaternion<f64>, center: Point3<f64>) -> Self {
        let t = -(rotation * center.coords);
        RigidPose::new(rotation, t)
    }

    /// Camera looking from `eye` towards `target`, with image "down" (+y)
    /// roughly along `down`.
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, down: Vector3<f64>) -> Result<Self, GeometryError> {
        let z = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidPose("eye coincides with target".into()))?;
        let x = down
            .cross(&z)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidPose("down vector parallel to view direction".into()))?;
        let y = z.cross(&x);
        // Rows of the world-to-camera rotation are the camera axes in world.
        let r = nalgebra::Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let rot = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(r));
        Ok(RigidPose::from_center(rot, eye))
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `[qw, qx, qy, qz]`
    pub fn quaternion_components(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn translation_components(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    /// World to camera coordinates.
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Camera to world coordinates.
    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.inverse() * (p.coords - self.translation))
    }

    pub fn inverse(&self) -> RigidPose {
        let inv = self.rotation.inverse();
        RigidPose::new(inv, -(inv * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.inverse() * self.translation))
    }

    /// Optical axis (+z of the camera) expressed in world coordinates.
    pub fn viewing_direction(&self) -> Vector3<f64> {
        self.rotation.inverse() * Vector3::z()
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_is_canonicalized() {
        let p = RigidPose::from_components([-1.0, 0.0, 0.0, 0.0], [0.0; 3]).unwrap();
        assert_eq!(p.quaternion_components(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_unit_quaternion() {
        assert!(RigidPose::from_components([1.0 + 1e-5, 0.0, 0.0, 0.0], [0.0; 3]).is_err());
        let ok = RigidPose::from_components([1.0 + 1e-7, 0.0, 0.0, 0.0], [0.0; 3]).unwrap();
        assert!((ok.rotation().quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn look_at_points_camera_at_target() {
        let pose = RigidPose::look_at(Point3::new(1.0, 2.0, 3.0), Point3::new(1.0, 2.0, 10.0), Vector3::y()).unwrap();
        let t = pose.transform_point(&Point3::new(1.0, 2.0, 10.0));
        assert!(t.x.abs() < 1e-12 && t.y.abs() < 1e-12);
        assert!((t.z - 7.0).abs() < 1e-12);
        assert!((pose.center() - Point3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn transform_then_inverse_is_identity(
            axis in prop::array::uniform3(-1.0f64..1.0),
            angle in -3.1f64..3.1,
            t in prop::array::uniform3(-10.0f64..10.0),
            p in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let axis = Vector3::from(axis);
            prop_assume!(axis.norm() > 1e-3);
            let rot = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            let pose = RigidPose::new(rot, Vector3::from(t));
            let p = Point3::from(p);
            let back = pose.inverse_transform_point(&pose.transform_point(&p));
            prop_assert!((back - p).norm() < 1e-9);
            let composed = pose.inverse().compose(&pose);
            prop_assert!((composed.transform_point(&p) - p).norm() < 1e-9);
        }
    }
}
