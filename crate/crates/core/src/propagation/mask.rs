use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PropagationError;

/// Foreground mask of one object, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    pub object_id: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize, object_id: u32) -> Self {
        BinaryMask {
            width,
            height,
            object_id,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize, object_id: u32) -> Self {
        BinaryMask {
            width,
            height,
            object_id,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, object_id: u32, bits: Vec<bool>) -> Result<Self, PropagationError> {
        if bits.len() != width * height {
            return Err(PropagationError::DimensionMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            object_id,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, object_id: u32, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            object_id,
            bits,
        }
    }

    /// Axis-aligned rectangle of columns `x0..x1` and rows `y0..y1`.
    pub fn rect(width: usize, height: usize, object_id: u32, x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self::from_fn(width, height, object_id, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get), but `false` outside the raster.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn check_shape(&self, other: &BinaryMask) -> Result<(), PropagationError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(PropagationError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask, PropagationError> {
        self.check_shape(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            object_id: self.object_id,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask, PropagationError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask, PropagationError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask, PropagationError> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            object_id: self.object_id,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other) && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    /// 3x3 square dilation; pixels outside the raster count as background.
    pub fn dilate3(&self) -> BinaryMask {
        self.morph3(false, |acc, v| acc || v, false)
    }

    /// 3x3 square erosion; pixels outside the raster count as foreground, so
    /// the image border never erodes the mask.
    pub fn erode3(&self) -> BinaryMask {
        self.morph3(true, |acc, v| acc && v, true)
    }

    /// Dilation followed by erosion.
    pub fn close3(&self) -> BinaryMask {
        self.dilate3().erode3()
    }

    fn morph3(&self, init: bool, op: impl Fn(bool, bool) -> bool, outside: bool) -> BinaryMask {
        let mut out = BinaryMask::empty(self.width, self.height, self.object_id);
        for y in 0..self.height as isize {
            for x in 0..self.width as isize {
                let mut acc = init;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (xx, yy) = (x + dx, y + dy);
                        let inside = xx >= 0 && yy >= 0 && (xx as usize) < self.width && (yy as usize) < self.height;
                        let v = if inside {
                            self.get(xx as usize, yy as usize)
                        } else {
                            outside
                        };
                        acc = op(acc, v);
                    }
                }
                out.set(x as usize, y as usize, acc);
            }
        }
        out
    }

    /// Reads a single-channel raster; any nonzero value is foreground.
    pub fn open(path: &Path, object_id: u32) -> Result<Self, PropagationError> {
        let img = image::open(path)
            .map_err(|e| PropagationError::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Ok(BinaryMask {
            width: w,
            height: h,
            object_id,
            bits: img.as_raw().iter().map(|v| *v != 0).collect(),
        })
    }

    /// Writes foreground as 255 and background as 0.
    pub fn save(&self, path: &Path) -> Result<(), PropagationError> {
        let raw = self.bits.iter().map(|b| if *b { 255u8 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, raw).expect("raster size");
        img.save(path).map_err(|e| PropagationError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
