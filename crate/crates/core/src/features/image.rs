use std::path::Path;

use super::FeatureError;

/// Single-channel floating point raster, intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "raster size mismatch");
        GrayImage { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample at continuous index coordinates, clamped at the border.
    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let xc = x.clamp(0.0, (self.width - 1) as f32);
        let yc = y.clamp(0.0, (self.height - 1) as f32);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f32;
        let fy = yc - y0 as f32;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// Rotates by 90 degrees clockwise. A point at pixel-centre coordinates
    /// `(u, v)` moves to `(height - v, u)`.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |i, j| self.get(j, h - 1 - i))
    }

    pub fn is_constant(&self) -> bool {
        match self.data.first() {
            Some(&v) => self.data.iter().all(|&x| x == v),
            None => true,
        }
    }

    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            image::Luma([(self.get(x as usize, y as usize).clamp(0.0, 1.0) * 255.0).round() as u8])
        })
    }

    pub fn from_luma8(img: &image::GrayImage) -> Self {
        GrayImage {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }

    /// Loads any raster format the `image` crate reads, converted to luma.
    pub fn open(path: &Path) -> Result<Self, FeatureError> {
        let img = image::open(path).map_err(|e| FeatureError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self::from_luma8(&img.to_luma8()))
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        self.to_luma8().save(path).map_err(|e| FeatureError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate90_moves_pixel_centres() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 10 + y) as f32);
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (3, 5));
        // Centre of pixel (x=4, y=0) is (4.5, 0.5) -> (3 - 0.5, 4.5) = pixel (2, 4).
        assert_eq!(r.get(2, 4), img.get(4, 0));
        assert_eq!(img.rotate90().rotate90().rotate90().rotate90(), img);
    }

    #[test]
    fn bilinear_sampling() {
        let img = GrayImage::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(img.sample(0.5, 0.5), 1.5);
        assert_eq!(img.sample(-3.0, 0.0), 0.0);
        assert_eq!(img.sample(1.0, 1.0), 3.0);
    }
}
