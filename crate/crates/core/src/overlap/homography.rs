use nalgebra::{DMatrix, Matrix3, Point2, Vector3};
use serde::{Deserialize, Serialize};

use super::OverlapError;

/// Smallest admissible `|det|` of the normalized matrix.
pub const MIN_DETERMINANT: f64 = 1e-12;

/// A planar projective map, stored with unit Frobenius norm and `h[2][2] >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Homography {
    h: Matrix3<f64>,
}

impl Homography {
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, OverlapError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(OverlapError::Degenerate("non-finite entries".into()));
        }
        let norm = m.norm();
        if norm == 0.0 {
            return Err(OverlapError::Degenerate("zero matrix".into()));
        }
        let mut h = m / norm;
        if h[(2, 2)] < 0.0 || (h[(2, 2)] == 0.0 && first_nonzero(&h) < 0.0) {
            h = -h;
        }
        let det = h.determinant();
        if det.abs() <= MIN_DETERMINANT {
            return Err(OverlapError::Degenerate(format!("determinant {det:e}")));
        }
        Ok(Homography { h })
    }

    pub fn identity() -> Self {
        Self::from_matrix(Matrix3::identity()).unwrap()
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::from_matrix(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0)).unwrap()
    }

    /// Uniform scaling by `s` about `(cx, cy)`.
    pub fn scaling_about(s: f64, cx: f64, cy: f64) -> Result<Self, OverlapError> {
        Self::from_matrix(Matrix3::new(
            s,
            0.0,
            cx * (1.0 - s),
            0.0,
            s,
            cy * (1.0 - s),
            0.0,
            0.0,
            1.0,
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.h
    }

    pub fn apply_homogeneous(&self, p: &Point2<f64>) -> Vector3<f64> {
        self.h * Vector3::new(p.x, p.y, 1.0)
    }

    /// Maps `p`; `None` if it lands on the line at infinity.
    pub fn apply(&self, p: &Point2<f64>) -> Option<Point2<f64>> {
        let v = self.apply_homogeneous(p);
        (v.z != 0.0).then(|| Point2::new(v.x / v.z, v.y / v.z))
    }

    pub fn inverse(&self) -> Self {
        let inv = self.h.try_inverse().expect("nondegenerate by construction");
        Self::from_matrix(inv).expect("inverse of a nondegenerate homography")
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Self, OverlapError> {
        Self::from_matrix(self.h * first.h)
    }

    /// Largest distance between the images of the four corners of a
    /// `width x height` frame under `self` and `other`.
    pub fn corner_transfer_error(&self, other: &Homography, width: f64, height: f64) -> f64 {
        frame_corners(width, height)
            .iter()
            .map(|c| match (self.apply(c), other.apply(c)) {
                (Some(a), Some(b)) => (a - b).norm(),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

fn first_nonzero(h: &Matrix3<f64>) -> f64 {
    h.transpose().iter().copied().find(|v| *v != 0.0).unwrap_or(0.0)
}

impl TryFrom<[[f64; 3]; 3]> for Homography {
    type Error = OverlapError;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, Self::Error> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

impl From<Homography> for [[f64; 3]; 3] {
    fn from(h: Homography) -> Self {
        std::array::from_fn(|r| std::array::from_fn(|c| h.h[(r, c)]))
    }
}

pub(crate) fn frame_corners(width: f64, height: f64) -> [Point2<f64>; 4] {
    [
        Point2::new(0.0, 0.0),
        Point2::new(width, 0.0),
        Point2::new(width, height),
        Point2::new(0.0, height),
    ]
}

/// Similarity that moves the centroid to the origin and scales the mean
/// distance from it to sqrt(2).
fn hartley(points: &[Point2<f64>]) -> Option<Matrix3<f64>> {
    let n = points.len() as f64;
    let c = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::new(p.x, p.y, 0.0))
        / n;
    let mean = points
        .iter()
        .map(|p| ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean > 1e-12) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: &Point2<f64>) -> (f64, f64) {
    (t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
}

/// Ratio of the second-smallest to the largest singular value below which
/// the DLT system is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-9;

/// Direct linear transform with Hartley normalization: the algebraic
/// least-squares homography mapping each `src[i]` to `dst[i]`.
pub fn dlt_solve(src: &[Point2<f64>], dst: &[Point2<f64>]) -> Result<Homography, OverlapError> {
    assert_eq!(src.len(), dst.len(), "correspondence lists differ in length");
    if src.len() < 4 {
        return Err(OverlapError::InsufficientMatches {
            found: src.len(),
            required: 4,
        });
    }
    let degenerate = || OverlapError::Degenerate("coincident or collinear points".into());
    let ts = hartley(src).ok_or_else(degenerate)?;
    let td = hartley(dst).ok_or_else(degenerate)?;

    let rows = (2 * src.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, q)) in src.iter().zip(dst).enumerate() {
        let (x, y) = transform(&ts, p);
        let (u, v) = transform(&td, q);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        a.row_mut(r + 1)
            .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(degenerate)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let (smallest, second, largest) = (order[0], order[1], order[order.len() - 1]);
    if svd.singular_values[second] <= RANK_TOLERANCE * svd.singular_values[largest] {
        return Err(degenerate());
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or_else(degenerate)?;
    Homography::from_matrix(td_inv * hn * ts)
}
