use std::collections::BTreeMap;

use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{SyntheticError, ValueNoise};
use crate::features::GrayImage;
use crate::geometry::{
    pixel_ray, project, CameraIntrinsics, Reconstruction, RegisteredFrame, RigidPose, SparsePoint, TrackObservation,
};
use crate::overlap::{symmetric_overlap, Homography};
use crate::propagation::BinaryMask;

/// A textured planar patch, or an unbounded plane when `half_extent` is
/// `None`. Texture coordinates are world distances along the two axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TexturedPlane {
    pub origin: Point3<f64>,
    /// Unit in-plane axes; must be orthogonal.
    pub u_axis: Vector3<f64>,
    pub v_axis: Vector3<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_extent: Option<[f64; 2]>,
    pub texture: ValueNoise,
}

impl TexturedPlane {
    pub fn unbounded(origin: Point3<f64>, u_axis: Vector3<f64>, v_axis: Vector3<f64>, texture: ValueNoise) -> Self {
        TexturedPlane {
            origin,
            u_axis,
            v_axis,
            half_extent: None,
            texture,
        }
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.u_axis.cross(&self.v_axis).normalize()
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        let ok = (self.u_axis.norm() - 1.0).abs() < 1e-9
            && (self.v_axis.norm() - 1.0).abs() < 1e-9
            && self.u_axis.dot(&self.v_axis).abs() < 1e-9
            && self.half_extent.is_none_or(|[a, b]| a > 0.0 && b > 0.0);
        if ok {
            Ok(())
        } else {
            Err(SyntheticError::InvalidScene(
                "plane axes must be orthonormal and extents positive".into(),
            ))
        }
    }

    /// In-plane coordinates of a world point on the plane.
    pub(crate) fn coords(&self, p: &Point3<f64>) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.u_axis), d.dot(&self.v_axis))
    }

    pub(crate) fn contains_coords(&self, s: f64, t: f64) -> bool {
        self.half_extent.is_none_or(|[a, b]| s.abs() <= a && t.abs() <= b)
    }

    /// Ray parameter and plane coordinates of the first hit, if any.
    fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>, shift: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let n = self.normal();
        let denom = n.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let o = self.origin + shift;
        let t = n.dot(&(o - origin)) / denom;
        if !(t > 0.0) {
            return None;
        }
        let (s, v) = self.coords(&(origin + dir * t - shift));
        self.contains_coords(s, v).then_some((t, s, v))
    }
}

/// A planar patch with its own identity, optionally translating at constant
/// velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub surface: TexturedPlane,
    /// World displacement per frame.
    #[serde(default)]
    pub velocity: Vector3<f64>,
}

impl SceneObject {
    pub fn is_static(&self) -> bool {
        self.velocity == Vector3::zeros()
    }

    fn shift(&self, frame: usize) -> Vector3<f64> {
        self.velocity * frame as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub name: String,
    pub camera: CameraIntrinsics,
    pub fps: f64,
    /// Intensity where a ray hits nothing.
    #[serde(default)]
    pub background: f32,
    pub planes: Vec<TexturedPlane>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    pub trajectory: Vec<RigidPose>,
}

/// What a pixel ray hits first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Plane(usize),
    Object(usize),
}

/// A rendered frame and its analytic ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub image: GrayImage,
    /// One mask per scene object, in scene order.
    pub masks: Vec<BinaryMask>,
}

impl SyntheticScene {
    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }

    pub fn width(&self) -> usize {
        self.camera.width() as usize
    }

    pub fn height(&self) -> usize {
        self.camera.height() as usize
    }

    /// EPIC-style frame name, 1-based.
    pub fn frame_name(&self, index: usize) -> String {
        format!("frame_{:010}.png", index + 1)
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.trajectory.is_empty() {
            return Err(SyntheticError::InvalidScene("empty trajectory".into()));
        }
        if !(self.fps > 0.0) {
            return Err(SyntheticError::InvalidScene(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        for p in self.planes.iter().chain(self.objects.iter().map(|o| &o.surface)) {
            p.validate()?;
        }
        for (i, pose) in self.trajectory.iter().enumerate() {
            let c = pose.center();
            let on_surface = self.surfaces(i).any(|(plane, shift)| {
                let o = plane.origin + shift;
                let dist = plane.normal().dot(&(c - o)).abs();
                let (s, t) = plane.coords(&(c - shift));
                dist < 1e-6 && plane.contains_coords(s, t)
            });
            if on_surface {
                return Err(SyntheticError::CameraInsideGeometry { frame: i });
            }
        }
        Ok(())
    }

    fn surfaces(&self, frame: usize) -> impl Iterator<Item = (&TexturedPlane, Vector3<f64>)> {
        self.planes
            .iter()
            .map(|p| (p, Vector3::zeros()))
            .chain(self.objects.iter().map(move |o| (&o.surface, o.shift(frame))))
    }

    fn trace(&self, frame: usize, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<(Surface, f64, f64, f64)> {
        let mut best: Option<(Surface, f64, f64, f64)> = None;
        let mut consider = |s: Surface, hit: Option<(f64, f64, f64)>| {
            if let Some((t, u, v)) = hit {
                if best.is_none_or(|b| t < b.1) {
                    best = Some((s, t, u, v));
                }
            }
        };
        for (k, p) in self.planes.iter().enumerate() {
            consider(Surface::Plane(k), p.intersect(origin, dir, &Vector3::zeros()));
        }
        for (k, o) in self.objects.iter().enumerate() {
            consider(Surface::Object(k), o.surface.intersect(origin, dir, &o.shift(frame)));
        }
        best
    }

    /// First surface hit by the ray through `pixel` in `frame`, with the ray
    /// depth along the viewing axis.
    pub fn surface_at(&self, frame: usize, pixel: &Point2<f64>) -> Option<(Surface, f64)> {
        let pose = &self.trajectory[frame];
        let (origin, dir) = pixel_ray(pixel, pose, &self.camera).ok()?;
        let (s, t, _, _) = self.trace(frame, &origin, &dir)?;
        Some((s, t))
    }

    fn texture_of(&self, s: Surface) -> &ValueNoise {
        match s {
            Surface::Plane(k) => &self.planes[k].texture,
            Surface::Object(k) => &self.objects[k].surface.texture,
        }
    }

    /// Renders frame `index` with one ray per pixel centre.
    pub fn render(&self, index: usize) -> Result<RenderedFrame, SyntheticError> {
        if index >= self.len() {
            return Err(SyntheticError::FrameOutOfRange { index, len: self.len() });
        }
        let (w, h) = (self.width(), self.height());
        let pose = &self.trajectory[index];
        let mut image = GrayImage::filled(w, h, self.background);
        let mut masks: Vec<BinaryMask> = self.objects.iter().map(|o| BinaryMask::empty(w, h, o.id)).collect();
        for y in 0..h {
            for x in 0..w {
                let pixel = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let (origin, dir) = pixel_ray(&pixel, pose, &self.camera)?;
                if let Some((s, _, u, v)) = self.trace(index, &origin, &dir) {
                    image.set(x, y, self.texture_of(s).sample(u, v) as f32);
                    if let Surface::Object(k) = s {
                        masks[k].set(x, y, true);
                    }
                }
            }
        }
        Ok(RenderedFrame { image, masks })
    }

    /// Homography induced by plane `plane` mapping pixels of frame `i` to
    /// pixels of frame `j`.
    pub fn plane_homography(&self, plane: usize, i: usize, j: usize) -> Result<Homography, SyntheticError> {
        let p = self
            .planes
            .get(plane)
            .ok_or_else(|| SyntheticError::InvalidScene(format!("no plane {plane}")))?;
        let (pi, pj) = (&self.trajectory[i], &self.trajectory[j]);
        let ri = pi.rotation().to_rotation_matrix().into_inner();
        let rj = pj.rotation().to_rotation_matrix().into_inner();
        let n_c = ri * p.normal();
        let d_c = p.normal().dot(&p.origin.coords) + n_c.dot(pi.translation());
        if d_c.abs() < 1e-12 {
            return Err(SyntheticError::CameraInsideGeometry { frame: i });
        }
        let r_rel = rj * ri.transpose();
        let t_rel = pj.translation() - r_rel * pi.translation();
        let k = self.camera.k_matrix();
        let k_inv = k.try_inverse().expect("pinhole intrinsics are invertible");
        let m = k * (r_rel + t_rel * n_c.transpose() / d_c) * k_inv;
        Homography::from_matrix(m).map_err(|e| SyntheticError::InvalidScene(e.to_string()))
    }

    /// Symmetric visual overlap between frames `i` and `j` computed from the
    /// homography of plane 0.
    pub fn analytic_overlap(&self, i: usize, j: usize) -> Result<f64, SyntheticError> {
        let h = self.plane_homography(0, i, j)?;
        Ok(symmetric_overlap(&h, self.width() as f64, self.height() as f64))
    }

    /// Sparse model with exact poses. Points sit at the centres of a world
    /// grid of spacing `spacing` on every static surface, one per grid cell
    /// seen by at least two frames through a `probe_stride` pixel lattice.
    pub fn reconstruction(&self, spacing: f64, probe_stride: usize) -> Result<Reconstruction, SyntheticError> {
        self.validate()?;
        let mut recon = Reconstruction {
            total_frame_count: self.len(),
            ..Default::default()
        };
        recon.cameras.insert(1, self.camera.clone());
        for (i, pose) in self.trajectory.iter().enumerate() {
            recon.frames.push(
                RegisteredFrame::new(i as u32 + 1, self.frame_name(i), 1, *pose).with_timestamp(i as f64 / self.fps),
            );
        }

        let mut cells: BTreeMap<(usize, i64, i64), Point3<f64>> = BTreeMap::new();
        let stride = probe_stride.max(1);
        for (i, pose) in self.trajectory.iter().enumerate() {
            for y in (0..self.height()).step_by(stride) {
                for x in (0..self.width()).step_by(stride) {
                    let pixel = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let (origin, dir) = pixel_ray(&pixel, pose, &self.camera)?;
                    let Some((s, _, u, v)) = self.trace(i, &origin, &dir) else {
                        continue;
                    };
                    let (key, plane) = match s {
                        Surface::Plane(k) => (k, &self.planes[k]),
                        Surface::Object(k) if self.objects[k].is_static() => {
                            (self.planes.len() + k, &self.objects[k].surface)
                        }
                        Surface::Object(_) => continue,
                    };
                    let (cu, cv) = ((u / spacing).floor() as i64, (v / spacing).floor() as i64);
                    cells.entry((key, cu, cv)).or_insert_with(|| {
                        let (su, sv) = ((cu as f64 + 0.5) * spacing, (cv as f64 + 0.5) * spacing);
                        plane.origin + plane.u_axis * su + plane.v_axis * sv
                    });
                }
            }
        }

        let mut next_id = 1u64;
        for ((key, _, _), position) in cells {
            let surface = if key < self.planes.len() {
                Surface::Plane(key)
            } else {
                Surface::Object(key - self.planes.len())
            };
            let plane = match surface {
                Surface::Plane(k) => &self.planes[k],
                Surface::Object(k) => &self.objects[k].surface,
            };
            let (s, t) = plane.coords(&position);
            if !plane.contains_coords(s, t) {
                continue;
            }
            let track: Vec<TrackObservation> = self
                .trajectory
                .iter()
                .enumerate()
                .filter_map(|(i, pose)| {
                    let proj = project(&position, pose, &self.camera).ok()?;
                    if !self.camera.contains(&proj.pixel) {
                        return None;
                    }
                    let (hit, _) = self.surface_at(i, &proj.pixel)?;
                    (hit == surface).then(|| TrackObservation {
                        frame: self.frame_name(i),
                        pixel: proj.pixel,
                    })
                })
                .collect();
            if track.len() < 2 {
                continue;
            }
            let mut sp = SparsePoint::new(next_id, position);
            sp.track = track;
            recon.points.push(sp);
            next_id += 1;
        }
        Ok(recon)
    }
}
