use std::fmt;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Iteration cap for iterative undistortion.
pub const UNDISTORT_MAX_ITERATIONS: usize = 50;
/// Convergence tolerance for iterative undistortion, in pixels.
pub const UNDISTORT_TOLERANCE_PX: f64 = 1e-10;

/// The COLMAP camera models understood by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CameraModel {
    /// `f, cx, cy`
    SimplePinhole,
    /// `fx, fy, cx, cy`
    Pinhole,
    /// `f, cx, cy, k`
    SimpleRadial,
    /// `fx, fy, cx, cy, k1, k2, p1, p2`
    #[serde(rename = "OPENCV")]
    OpenCv,
}

impl CameraModel {
    pub fn num_params(self) -> usize {
        match self {
            CameraModel::SimplePinhole => 3,
            CameraModel::Pinhole => 4,
            CameraModel::SimpleRadial => 4,
            CameraModel::OpenCv => 8,
        }
    }

    pub fn colmap_name(self) -> &'static str {
        match self {
            CameraModel::SimplePinhole => "SIMPLE_PINHOLE",
            CameraModel::Pinhole => "PINHOLE",
            CameraModel::SimpleRadial => "SIMPLE_RADIAL",
            CameraModel::OpenCv => "OPENCV",
        }
    }

    pub fn has_distortion(self) -> bool {
        matches!(self, CameraModel::SimpleRadial | CameraModel::OpenCv)
    }
}

impl fmt::Display for CameraModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.colmap_name())
    }
}

impl FromStr for CameraModel {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SIMPLE_PINHOLE" => Ok(CameraModel::SimplePinhole),
            "PINHOLE" => Ok(CameraModel::Pinhole),
            "SIMPLE_RADIAL" => Ok(CameraModel::SimpleRadial),
            "OPENCV" => Ok(CameraModel::OpenCv),
            other => Err(GeometryError::UnsupportedModel(other.to_string())),
        }
    }
}

/// Intrinsic calibration of one camera.
///
/// Parameters are stored in COLMAP order for the given model. Pixel
/// coordinates put the top-left corner of the image at `(0, 0)`, so the
/// centre of pixel `(col, row)` is `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics", into = "RawIntrinsics")]
pub struct CameraIntrinsics {
    model: CameraModel,
    width: u32,
    height: u32,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawIntrinsics {
    model: CameraModel,
    width: u32,
    height: u32,
    params: Vec<f64>,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = GeometryError;

    fn try_from(raw: RawIntrinsics) -> Result<Self, Self::Error> {
        CameraIntrinsics::new(raw.model, raw.width, raw.height, raw.params)
    }
}

impl From<CameraIntrinsics> for RawIntrinsics {
    fn from(c: CameraIntrinsics) -> Self {
        RawIntrinsics {
            model: c.model,
            width: c.width,
            height: c.height,
            params: c.params,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(model: CameraModel, width: u32, height: u32, params: Vec<f64>) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        if params.len() != model.num_params() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "{model} expects {} parameters, got {}",
                model.num_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("parameters must be finite".into()));
        }
        let cam = CameraIntrinsics {
            model,
            width,
            height,
            params,
        };
        let (fx, fy) = cam.focal();
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got ({fx}, {fy})"
            )));
        }
        Ok(cam)
    }

    pub fn simple_pinhole(width: u32, height: u32, f: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        Self::new(CameraModel::SimplePinhole, width, height, vec![f, cx, cy])
    }

    pub fn pinhole(width: u32, height: u32, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        Self::new(CameraModel::Pinhole, width, height, vec![fx, fy, cx, cy])
    }

    pub fn simple_radial(width: u32, height: u32, f: f64, cx: f64, cy: f64, k: f64) -> Result<Self, GeometryError> {
        Self::new(CameraModel::SimpleRadial, width, height, vec![f, cx, cy, k])
    }

    pub fn model(&self) -> CameraModel {
        self.model
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn focal(&self) -> (f64, f64) {
        match self.model {
            CameraModel::SimplePinhole | CameraModel::SimpleRadial => (self.params[0], self.params[0]),
            CameraModel::Pinhole | CameraModel::OpenCv => (self.params[0], self.params[1]),
        }
    }

    pub fn principal_point(&self) -> (f64, f64) {
        match self.model {
            CameraModel::SimplePinhole | CameraModel::SimpleRadial => (self.params[1], self.params[2]),
            CameraModel::Pinhole | CameraModel::OpenCv => (self.params[2], self.params[3]),
        }
    }

    /// Whether a pixel lies inside `[0, width) x [0, height)`.
    pub fn contains(&self, pixel: &Point2<f64>) -> bool {
        pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x < self.width as f64 && pixel.y < self.height as f64
    }

    /// Applies lens distortion to normalized image coordinates.
    pub fn distort(&self, n: Vector2<f64>) -> Vector2<f64> {
        match self.model {
            CameraModel::SimplePinhole | CameraModel::Pinhole => n,
            CameraModel::SimpleRadial => {
                let k = self.params[3];
                let r2 = n.norm_squared();
                n * (1.0 + k * r2)
            }
            CameraModel::OpenCv => {
                let (k1, k2, p1, p2) = (self.params[4], self.params[5], self.params[6], self.params[7]);
                let (x, y) = (n.x, n.y);
                let r2 = x * x + y * y;
                let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
                Vector2::new(
                    x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
                    y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y,
                )
            }
        }
    }

    /// Inverts [`distort`](Self::distort) by fixed-point iteration.
    pub fn undistort(&self, d: Vector2<f64>) -> Result<Vector2<f64>, GeometryError> {
        if !self.model.has_distortion() {
            return Ok(d);
        }
        let (fx, fy) = self.focal();
        let px_scale = fx.max(fy);
        let mut n = d;
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            // n <- n + (d - distort(n)): converges for the mild distortions
            // these models are used with.
            let next = n + (d - self.distort(n));
            let step = (next - n).norm() * px_scale;
            n = next;
            if !n.x.is_finite() || !n.y.is_finite() {
                break;
            }
            if step < UNDISTORT_TOLERANCE_PX {
                return Ok(n);
            }
        }
        Err(GeometryError::UndistortionDiverged {
            iterations: UNDISTORT_MAX_ITERATIONS,
        })
    }

    /// Maps normalized (undistorted) coordinates to pixels.
    pub fn normalized_to_pixel(&self, n: Vector2<f64>) -> Point2<f64> {
        let d = self.distort(n);
        let (fx, fy) = self.focal();
        let (cx, cy) = self.principal_point();
        Point2::new(fx * d.x + cx, fy * d.y + cy)
    }

    /// Maps pixels to normalized (undistorted) coordinates.
    pub fn pixel_to_normalized(&self, p: &Point2<f64>) -> Result<Vector2<f64>, GeometryError> {
        let (fx, fy) = self.focal();
        let (cx, cy) = self.principal_point();
        self.undistort(Vector2::new((p.x - cx) / fx, (p.y - cy) / fy))
    }

    /// The 3x3 calibration matrix (ignores distortion).
    pub fn k_matrix(&self) -> nalgebra::Matrix3<f64> {
        let (fx, fy) = self.focal();
        let (cx, cy) = self.principal_point();
        nalgebra::Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0)
    }

    /// Shrinks the image rectangle by `margin` pixels on every side.
    pub fn cropped(&self, margin: u32) -> Result<Self, GeometryError> {
        if 2 * margin >= self.width || 2 * margin >= self.height {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "crop margin {margin} leaves no image"
            )));
        }
        let mut params = self.params.clone();
        let (ci, cj) = match self.model {
            CameraModel::SimplePinhole | CameraModel::SimpleRadial => (1, 2),
            CameraModel::Pinhole | CameraModel::OpenCv => (2, 3),
        };
        params[ci] -= margin as f64;
        params[cj] -= margin as f64;
        Self::new(self.model, self.width - 2 * margin, self.height - 2 * margin, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_param_count() {
        assert!(CameraIntrinsics::new(CameraModel::Pinhole, 10, 10, vec![1.0, 2.0, 3.0]).is_err());
        assert!(CameraIntrinsics::new(CameraModel::OpenCv, 10, 10, vec![1.0; 8]).is_ok());
    }

    #[test]
    fn rejects_nonpositive_focal_and_size() {
        assert!(CameraIntrinsics::simple_pinhole(10, 10, 0.0, 5.0, 5.0).is_err());
        assert!(CameraIntrinsics::simple_pinhole(0, 10, 1.0, 5.0, 5.0).is_err());
        assert!(CameraIntrinsics::pinhole(10, 10, 1.0, -1.0, 5.0, 5.0).is_err());
    }

    #[test]
    fn unknown_model_name_is_rejected() {
        assert!("FISHEYE".parse::<CameraModel>().is_err());
        assert_eq!("OPENCV".parse::<CameraModel>().unwrap(), CameraModel::OpenCv);
    }

    #[test]
    fn undistort_inverts_opencv() {
        let cam = CameraIntrinsics::new(
            CameraModel::OpenCv,
            456,
            256,
            vec![250.0, 255.0, 228.0, 128.0, 0.05, -0.01, 0.001, -0.0005],
        )
        .unwrap();
        let n = Vector2::new(0.4, -0.3);
        let back = cam.undistort(cam.distort(n)).unwrap();
        assert!((back - n).norm() < 1e-12);
    }

    #[test]
    fn wild_distortion_reports_divergence() {
        let cam = CameraIntrinsics::simple_radial(456, 256, 200.0, 228.0, 128.0, -5.0).unwrap();
        assert!(matches!(
            cam.undistort(Vector2::new(3.0, 3.0)),
            Err(GeometryError::UndistortionDiverged { .. })
        ));
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"model":"PINHOLE","width":10,"height":10,"params":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<CameraIntrinsics>(bad).is_err());
        let good = r#"{"model":"SIMPLE_RADIAL","width":10,"height":10,"params":[1.0,2.0,3.0,0.1]}"#;
        let cam: CameraIntrinsics = serde_json::from_str(good).unwrap();
        assert_eq!(cam.model(), CameraModel::SimpleRadial);
    }
}
