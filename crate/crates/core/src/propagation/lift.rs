use nalgebra::{Matrix3, Point2, Point3, Unit, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryMask, PropagationError};
use crate::geometry::{pixel_ray, project, CameraIntrinsics, RegisteredFrame, RigidPose, SparsePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    /// Sparse points with a larger stored reprojection error are ignored.
    pub max_point_error: f64,
    /// Fewer supporting points than this skips the plane fit.
    pub min_points: usize,
    /// Grid stride, in pixels, of the mask pixels lifted to 3D.
    pub sample_stride: usize,
    /// Plane inlier band as a fraction of the median point depth.
    pub plane_inlier_fraction: f64,
    pub plane_ransac_iterations: usize,
    /// Disk radius used when splatting reprojected samples; defaults to the
    /// sample stride.
    pub splat_radius: Option<f64>,
    /// Minimum fraction of samples landing in frame for the object to count
    /// as visible.
    pub visibility_min: f64,
    pub seed: u64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            max_point_error: 2.0,
            min_points: 10,
            sample_stride: 2,
            plane_inlier_fraction: 0.02,
            plane_ransac_iterations: 200,
            splat_radius: None,
            visibility_min: 0.2,
            seed: 0,
        }
    }
}

impl PropagationConfig {
    pub fn effective_splat_radius(&self) -> f64 {
        self.splat_radius.unwrap_or(self.sample_stride as f64)
    }
}

/// Surface the mask is lifted onto.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftSurface {
    /// World plane `normal . x = offset`.
    Plane { normal: Unit<Vector3<f64>>, offset: f64 },
    /// Constant camera-frame depth in the reference view.
    ConstantDepth { depth: f64 },
}

impl LiftSurface {
    pub fn is_fallback(&self) -> bool {
        matches!(self, LiftSurface::ConstantDepth { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedObject {
    pub object_id: u32,
    pub anchor_points: Vec<Point3<f64>>,
    pub surface: LiftSurface,
    pub mask_samples: Vec<Point3<f64>>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares plane through `points`; `None` when they are (nearly)
/// coincident or collinear.
fn fit_plane(points: &[Point3<f64>]) -> Option<(Unit<Vector3<f64>>, f64)> {
    if points.len() < 3 {
        return None;
    }
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / points.len() as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (mid, large) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(large > 0.0) || mid <= 1e-12 * large {
        return None;
    }
    let normal = Unit::new_normalize(eig.eigenvectors.column(order[0]).into_owned());
    Some((normal, normal.dot(&c)))
}

fn plane_through(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<(Unit<Vector3<f64>>, f64)> {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    let scale = (b - a).norm().max((c - a).norm());
    if !(len > 1e-9 * scale * scale) {
        return None;
    }
    let n = Unit::new_unchecked(n / len);
    Some((n, n.dot(&a.coords)))
}

/// RANSAC plane with a final least-squares re-fit on the inliers.
fn robust_plane(
    points: &[Point3<f64>],
    threshold: f64,
    iterations: usize,
    seed: u64,
) -> Option<(Unit<Vector3<f64>>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Unit<Vector3<f64>>, f64)> = None;
    for _ in 0..iterations.max(1) {
        let idx = sample(&mut rng, points.len(), 3);
        let Some((n, d)) = plane_through(&points[idx.index(0)], &points[idx.index(1)], &points[idx.index(2)]) else {
            continue;
        };
        let count = points
            .iter()
            .filter(|p| (n.dot(&p.coords) - d).abs() < threshold)
            .count();
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, n, d));
        }
    }
    let (_, n, d) = best?;
    let inliers: Vec<Point3<f64>> = points
        .iter()
        .filter(|p| (n.dot(&p.coords) - d).abs() < threshold)
        .copied()
        .collect();
    fit_plane(&inliers)
}

/// Lifts the pixels of `mask` into 3D using the sparse points that project
/// inside it. Points with a track only count when the reference frame is
/// among their observations.
pub fn lift_mask(
    mask: &BinaryMask,
    frame: &RegisteredFrame,
    intr: &CameraIntrinsics,
    points: &[SparsePoint],
    config: &PropagationConfig,
) -> Result<LiftedObject, PropagationError> {
    let fail = |reason: &str| PropagationError::LiftFailed {
        object_id: mask.object_id,
        reason: reason.to_string(),
    };
    if mask.width() != intr.width() as usize || mask.height() != intr.height() as usize {
        return Err(PropagationError::DimensionMismatch(format!(
            "mask is {}x{}, camera is {}x{}",
            mask.width(),
            mask.height(),
            intr.width(),
            intr.height()
        )));
    }
    let mut anchors = Vec::new();
    let mut depths = Vec::new();
    // A point with a track must be observed in the reference frame; this
    // keeps surfaces hidden behind the object out of the fit.
    let observed = |p: &SparsePoint| p.track.is_empty() || p.track.iter().any(|o| o.frame == frame.name);
    for p in points
        .iter()
        .filter(|p| p.error < config.max_point_error && observed(p))
    {
        let Ok(proj) = project(&p.position, &frame.pose, intr) else {
            continue;
        };
        if !intr.contains(&proj.pixel) {
            continue;
        }
        let (x, y) = (proj.pixel.x.floor() as usize, proj.pixel.y.floor() as usize);
        if x < mask.width() && y < mask.height() && mask.get(x, y) {
            anchors.push(p.position);
            depths.push(proj.depth);
        }
    }
    if anchors.is_empty() {
        return Err(fail("no sparse points inside the mask"));
    }
    let median_depth = median(&mut depths.clone());
    let plane = if anchors.len() >= config.min_points {
        robust_plane(
            &anchors,
            config.plane_inlier_fraction * median_depth,
            config.plane_ransac_iterations,
            config.seed,
        )
    } else {
        None
    };
    let surface = match plane {
        Some((normal, offset)) => LiftSurface::Plane { normal, offset },
        None => LiftSurface::ConstantDepth { depth: median_depth },
    };

    let stride = config.sample_stride.max(1);
    let mut samples = Vec::new();
    for y in (0..mask.height()).step_by(stride) {
        for x in (0..mask.width()).step_by(stride) {
            if !mask.get(x, y) {
                continue;
            }
            let pixel = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            if let Some(p) = lift_pixel(&pixel, &surface, &frame.pose, intr) {
                samples.push(p);
            }
        }
    }
    if samples.is_empty() {
        return Err(fail("no mask pixel intersects the fitted surface"));
    }
    Ok(LiftedObject {
        object_id: mask.object_id,
        anchor_points: anchors,
        surface,
        mask_samples: samples,
    })
}

fn lift_pixel(
    pixel: &Point2<f64>,
    surface: &LiftSurface,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
) -> Option<Point3<f64>> {
    match surface {
        LiftSurface::ConstantDepth { depth } => crate::geometry::backproject(pixel, *depth, pose, intr).ok(),
        LiftSurface::Plane { normal, offset } => {
            let (origin, dir) = pixel_ray(pixel, pose, intr).ok()?;
            let denom = normal.dot(&dir);
            if denom.abs() < 1e-9 {
                return None;
            }
            let t = (offset - normal.dot(&origin.coords)) / denom;
            (t > 0.0).then(|| origin + dir * t)
        }
    }
}
