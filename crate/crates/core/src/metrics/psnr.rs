use std::path::Path;

use super::{check_shape, MetricError};
use crate::features::GrayImage;
use crate::propagation::BinaryMask;

/// Interleaved image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if channels == 0 || values.len() != width * height * channels {
            return Err(MetricError::DimensionMismatch(format!(
                "{} values for {width}x{height}x{channels}",
                values.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Raster {
            width: img.width(),
            height: img.height(),
            channels: 1,
            values: img.data().iter().map(|v| *v as f64).collect(),
        }
    }

    /// 8-bit images are scaled by 1/255.
    pub fn from_dynamic(img: &image::DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let (channels, values): (usize, Vec<f64>) = match img {
            image::DynamicImage::ImageLuma8(g) => (1, g.as_raw().iter().map(|v| *v as f64 / 255.0).collect()),
            other => (3, other.to_rgb8().as_raw().iter().map(|v| *v as f64 / 255.0).collect()),
        };
        Raster {
            width: w,
            height: h,
            channels,
            values,
        }
    }

    pub fn open(path: &Path) -> Result<Self, MetricError> {
        let img = image::open(path).map_err(|e| MetricError::Image {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// PSNR in dB with peak 1: `10 log10(1 / MSE)`, the squared error pooled
/// over all channels of the pixels in `region` (every pixel when `None`).
/// Identical inputs give `f64::INFINITY`.
pub fn psnr(pred: &Raster, gt: &Raster, region: Option<&BinaryMask>) -> Result<f64, MetricError> {
    check_shape(
        "prediction vs ground truth",
        (pred.width, pred.height),
        (gt.width, gt.height),
    )?;
    if pred.channels != gt.channels {
        return Err(MetricError::DimensionMismatch(format!(
            "{} vs {} channels",
            pred.channels, gt.channels
        )));
    }
    if let Some(m) = region {
        check_shape("image vs region", (pred.width, pred.height), (m.width(), m.height()))?;
    }
    let c = pred.channels;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..pred.width * pred.height {
        if region.is_some_and(|m| !m.bits()[i]) {
            continue;
        }
        for k in i * c..(i + 1) * c {
            let d = pred.values[k] - gt.values[k];
            sum += d * d;
        }
        n += c;
    }
    if n == 0 {
        return Err(MetricError::EmptyRegion);
    }
    if sum == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (n as f64 / sum).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrSplit {
    pub all: f64,
    /// Undefined when the foreground mask covers the whole frame.
    pub bg: Option<f64>,
    /// Undefined when the foreground mask is empty.
    pub fg: Option<f64>,
}

pub fn psnr_split(pred: &Raster, gt: &Raster, fg: &BinaryMask) -> Result<PsnrSplit, MetricError> {
    let all = psnr(pred, gt, None)?;
    let part = |m: &BinaryMask| match psnr(pred, gt, Some(m)) {
        Ok(v) => Ok(Some(v)),
        Err(MetricError::EmptyRegion) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(PsnrSplit {
        all,
        bg: part(&fg.complement())?,
        fg: part(fg)?,
    })
}
