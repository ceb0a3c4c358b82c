//! Rotation statistics used by the orientation histograms.

use nalgebra::{Matrix4, Quaternion, Rotation3, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidPose};

/// Chordal L2 mean of a set of rotations.
///
/// Returns the principal eigenvector of `sum(q q^T)`. The result does not
/// depend on the sign of any input quaternion.
pub fn mean_rotation(quaternions: &[UnitQuaternion<f64>]) -> Result<UnitQuaternion<f64>, GeometryError> {
    let first = quaternions.first().ok_or(GeometryError::EmptyInput("mean_rotation"))?;
    let reference = first.quaternion().coords;
    let mut acc = Matrix4::<f64>::zeros();
    for q in quaternions {
        let mut v: Vector4<f64> = q.quaternion().coords;
        if v.dot(&reference) < 0.0 {
            v = -v;
        }
        acc += v * v.transpose();
    }
    let eig = acc.symmetric_eigen();
    let (best, _) =
        eig.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
        );
    let mut v: Vector4<f64> = eig.eigenvectors.column(best).into_owned();
    // Deterministic sign: scalar part positive, falling back to the first
    // non-negligible vector component when the scalar part vanishes.
    // nalgebra stores quaternion coords as (i, j, k, w).
    let order = [3usize, 0, 1, 2];
    if let Some(&i) = order.iter().find(|&&i| v[i].abs() > 1e-12) {
        if v[i] < 0.0 {
            v = -v;
        }
    }
    Ok(UnitQuaternion::from_quaternion(Quaternion::from(v)))
}

/// Euler decomposition of a relative rotation, in radians.
///
/// Convention: `R = Ry(yaw) * Rx(pitch) * Rz(roll)` with camera axes x right,
/// y down, z forward. Yaw and roll cover `(-pi, pi]`; pitch covers
/// `[-pi/2, pi/2]`. At pitch = ±pi/2 the roll is reported as 0 and the whole
/// residual rotation is assigned to yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl Orientation {
    pub fn from_rotation(r: &Rotation3<f64>) -> Self {
        let m = r.matrix();
        let s = (-m[(1, 2)]).clamp(-1.0, 1.0);
        if s.abs() > 1.0 - 1e-12 {
            let pitch = s.signum() * std::f64::consts::FRAC_PI_2;
            let yaw = (-m[(2, 0)]).atan2(m[(0, 0)]);
            return Orientation { pitch, yaw, roll: 0.0 };
        }
        Orientation {
            pitch: s.asin(),
            yaw: m[(0, 2)].atan2(m[(2, 2)]),
            roll: m[(1, 0)].atan2(m[(1, 1)]),
        }
    }

    pub fn to_rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll)
    }

    pub fn degrees(&self) -> [f64; 3] {
        [self.pitch.to_degrees(), self.yaw.to_degrees(), self.roll.to_degrees()]
    }
}

/// Orientation of `pose` relative to `reference`: decomposes
/// `reference^-1 * R_pose`.
pub fn relative_orientation(pose: &RigidPose, reference: &UnitQuaternion<f64>) -> Orientation {
    let rel = reference.inverse() * pose.rotation();
    if rel.angle() == 0.0 {
        return Orientation {
            pitch: 0.0,
            yaw: 0.0,
            roll: 0.0,
        };
    }
    Orientation::from_rotation(&rel.to_rotation_matrix())
}
