//! Difference-of-Gaussians detector with gradient-histogram descriptors.
//!
//! Follows Lowe's construction: a Gaussian scale space with `octave_layers`
//! intervals per octave, extrema of the DoG stack refined to sub-pixel
//! accuracy, dominant orientations from a 36-bin gradient histogram and a
//! 4x4x8 descriptor. Octaves are produced by 2x2 box averaging so that the
//! pyramid commutes with 90 degree rotations of even-sized images.

use std::f32::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Detector, FeatureSet, GrayImage, Keypoint};

const BORDER: usize = 5;
const MAX_REFINE_STEPS: usize = 5;
const ORI_HIST_BINS: usize = 36;
const ORI_SIG_FACTOR: f32 = 1.5;
const ORI_RADIUS_FACTOR: f32 = 3.0 * ORI_SIG_FACTOR;
const ORI_PEAK_RATIO: f32 = 0.8;
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const DESC_SCALE: f32 = 3.0;
const DESC_CLAMP: f32 = 0.2;

pub const DESCRIPTOR_DIM: usize = DESC_WIDTH * DESC_WIDTH * DESC_BINS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiftConfig {
    /// Strongest responses kept after detection.
    pub max_features: usize,
    pub octave_layers: usize,
    /// Blur of the first scale-space level.
    pub sigma: f32,
    /// Blur assumed present in the input image.
    pub input_blur: f32,
    pub contrast_threshold: f32,
    pub edge_threshold: f32,
}

impl Default for SiftConfig {
    fn default() -> Self {
        SiftConfig {
            max_features: 2000,
            octave_layers: 3,
            sigma: 1.6,
            input_blur: 0.5,
            contrast_threshold: 0.04,
            edge_threshold: 10.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sift {
    pub config: SiftConfig,
}

impl Sift {
    pub fn new(config: SiftConfig) -> Self {
        Sift { config }
    }
}

impl Detector for Sift {
    fn detect(&self, image: &GrayImage) -> FeatureSet {
        detect_and_describe(image, &self.config)
    }
}

/// Detects keypoints and computes descriptors. Deterministic; a constant
/// image yields an empty set.
pub fn detect_and_describe(image: &GrayImage, config: &SiftConfig) -> FeatureSet {
    if image.width() < 2 * BORDER + 3 || image.height() < 2 * BORDER + 3 || image.is_constant() {
        return FeatureSet::empty(DESCRIPTOR_DIM);
    }
    let pyramid = Pyramid::build(image, config);
    let mut candidates = Vec::new();
    for o in 0..pyramid.octaves.len() {
        find_extrema(&pyramid, o, config, &mut candidates);
    }
    // Strongest first; ties keep scan order, which is deterministic.
    candidates.sort_by(|a, b| b.response.total_cmp(&a.response));

    let mut keypoints = Vec::new();
    let mut descriptors = Vec::new();
    for c in candidates {
        if keypoints.len() >= config.max_features {
            break;
        }
        let gauss = &pyramid.octaves[c.octave].gauss[c.layer];
        for angle in dominant_orientations(gauss, &c) {
            if keypoints.len() >= config.max_features {
                break;
            }
            let Some(desc) = describe(gauss, &c, angle) else {
                continue;
            };
            let scale = (1u32 << c.octave) as f32;
            let (x, y) = ((c.x + 0.5) * scale, (c.y + 0.5) * scale);
            if x < 0.0 || y < 0.0 || x >= image.width() as f32 || y >= image.height() as f32 {
                continue;
            }
            keypoints.push(Keypoint {
                x,
                y,
                scale: c.sigma * scale,
                orientation: angle,
                response: c.response,
            });
            descriptors.extend_from_slice(&desc);
        }
    }
    FeatureSet::from_parts(keypoints, descriptors, DESCRIPTOR_DIM).expect("descriptor layout")
}

struct Octave {
    gauss: Vec<GrayImage>,
    dog: Vec<GrayImage>,
}

struct Pyramid {
    octaves: Vec<Octave>,
    /// Absolute blur (in octave pixels) of each Gaussian level.
    level_sigma: Vec<f32>,
}

impl Pyramid {
    fn build(image: &GrayImage, config: &SiftConfig) -> Self {
        let s = config.octave_layers;
        let k = 2f32.powf(1.0 / s as f32);
        let level_sigma: Vec<f32> = (0..s + 3).map(|i| config.sigma * k.powi(i as i32)).collect();
        let increments: Vec<f32> = (1..s + 3)
            .map(|i| (level_sigma[i].powi(2) - level_sigma[i - 1].powi(2)).sqrt())
            .collect();

        let min_dim = image.width().min(image.height()) as f32;
        let n_octaves = ((min_dim.log2() - 3.0).floor() as i32).max(1) as usize;

        let initial = (config.sigma.powi(2) - config.input_blur.powi(2)).max(0.01).sqrt();
        let mut base = gaussian_blur(image, initial);
        let mut octaves = Vec::with_capacity(n_octaves);
        for o in 0..n_octaves {
            if o > 0 {
                let prev: &Octave = &octaves[o - 1];
                base = downsample(&prev.gauss[s]);
                if base.width() < 2 * BORDER + 3 || base.height() < 2 * BORDER + 3 {
                    break;
                }
            }
            let mut gauss = Vec::with_capacity(s + 3);
            gauss.push(base.clone());
            for inc in &increments {
                let next = gaussian_blur(gauss.last().unwrap(), *inc);
                gauss.push(next);
            }
            let dog = gauss
                .windows(2)
                .map(|w| {
                    GrayImage::new(
                        w[0].width(),
                        w[0].height(),
                        w[1].data().iter().zip(w[0].data()).map(|(a, b)| a - b).collect(),
                    )
                })
                .collect();
            octaves.push(Octave { gauss, dog });
        }
        Pyramid { octaves, level_sigma }
    }
}

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut k: Vec<f32> = (0..=2 * radius)
        .map(|i| {
            let d = i as f32 - radius as f32;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with replicated borders.
pub(crate) fn gaussian_blur(img: &GrayImage, sigma: f32) -> GrayImage {
    let kernel = gaussian_kernel(sigma);
    let r = kernel.len() / 2;
    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            if x >= r && x + r < w {
                for (kv, sv) in kernel.iter().zip(&row[x - r..=x + r]) {
                    acc += kv * sv;
                }
            } else {
                for (i, kv) in kernel.iter().enumerate() {
                    let xx = (x as isize + i as isize - r as isize).clamp(0, w as isize - 1) as usize;
                    acc += kv * row[xx];
                }
            }
            out[x] = acc;
        }
    }
    let mut dst = vec![0f32; w * h];
    for (i, kv) in kernel.iter().enumerate() {
        let off = i as isize - r as isize;
        for y in 0..h {
            let yy = (y as isize + off).clamp(0, h as isize - 1) as usize;
            let src_row = &tmp[yy * w..(yy + 1) * w];
            let dst_row = &mut dst[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    GrayImage::new(w, h, dst)
}

fn downsample(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width() / 2, img.height() / 2);
    GrayImage::from_fn(w, h, |x, y| {
        0.25 * (img.get(2 * x, 2 * y)
            + img.get(2 * x + 1, 2 * y)
            + img.get(2 * x, 2 * y + 1)
            + img.get(2 * x + 1, 2 * y + 1))
    })
}

/// A refined scale-space extremum, in octave pixel-index coordinates.
#[derive(Debug, Clone)]
struct Candidate {
    octave: usize,
    layer: usize,
    x: f32,
    y: f32,
    /// Blur at the extremum, in octave pixels.
    sigma: f32,
    response: f32,
}

fn find_extrema(pyr: &Pyramid, o: usize, config: &SiftConfig, out: &mut Vec<Candidate>) {
    let s = config.octave_layers;
    let oct = &pyr.octaves[o];
    let (w, h) = (oct.dog[0].width(), oct.dog[0].height());
    let prefilter = 0.5 * config.contrast_threshold / s as f32;
    for layer in 1..=s {
        let (prev, cur, next) = (&oct.dog[layer - 1], &oct.dog[layer], &oct.dog[layer + 1]);
        for y in BORDER..h - BORDER {
            for x in BORDER..w - BORDER {
                let v = cur.get(x, y);
                if v.abs() <= prefilter {
                    continue;
                }
                if !is_extremum(v, x, y, prev, cur, next) {
                    continue;
                }
                if let Some(c) = refine(pyr, o, layer, x, y, config) {
                    out.push(c);
                }
            }
        }
    }
}

fn is_extremum(v: f32, x: usize, y: usize, prev: &GrayImage, cur: &GrayImage, next: &GrayImage) -> bool {
    let maximum = v > 0.0;
    for img in [prev, cur, next] {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if std::ptr::eq(img, cur) && xx == x && yy == y {
                    continue;
                }
                let n = img.get(xx, yy);
                if (maximum && n > v) || (!maximum && n < v) {
                    return false;
                }
            }
        }
    }
    true
}

fn refine(pyr: &Pyramid, o: usize, layer0: usize, x0: usize, y0: usize, config: &SiftConfig) -> Option<Candidate> {
    let s = config.octave_layers;
    let dog = &pyr.octaves[o].dog;
    let (w, h) = (dog[0].width(), dog[0].height());
    let (mut x, mut y, mut layer) = (x0, y0, layer0);
    let mut offset = [0f32; 3];
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let (prev, cur, next) = (&dog[layer - 1], &dog[layer], &dog[layer + 1]);
        let g = [
            0.5 * (cur.get(x + 1, y) - cur.get(x - 1, y)),
            0.5 * (cur.get(x, y + 1) - cur.get(x, y - 1)),
            0.5 * (next.get(x, y) - prev.get(x, y)),
        ];
        let v2 = 2.0 * cur.get(x, y);
        let dxx = cur.get(x + 1, y) + cur.get(x - 1, y) - v2;
        let dyy = cur.get(x, y + 1) + cur.get(x, y - 1) - v2;
        let dss = next.get(x, y) + prev.get(x, y) - v2;
        let dxy =
            0.25 * (cur.get(x + 1, y + 1) - cur.get(x - 1, y + 1) - cur.get(x + 1, y - 1) + cur.get(x - 1, y - 1));
        let dxs = 0.25 * (next.get(x + 1, y) - next.get(x - 1, y) - prev.get(x + 1, y) + prev.get(x - 1, y));
        let dys = 0.25 * (next.get(x, y + 1) - next.get(x, y - 1) - prev.get(x, y + 1) + prev.get(x, y - 1));
        let hess = nalgebra::Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
        let sol = hess.lu().solve(&nalgebra::Vector3::new(-g[0], -g[1], -g[2]))?;
        offset = [sol[0], sol[1], sol[2]];
        if offset.iter().all(|v| v.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return None;
        }
        let nx = x as isize + offset[0].round() as isize;
        let ny = y as isize + offset[1].round() as isize;
        let nl = layer as isize + offset[2].round() as isize;
        if nl < 1
            || nl > s as isize
            || nx < BORDER as isize
            || ny < BORDER as isize
            || nx >= (w - BORDER) as isize
            || ny >= (h - BORDER) as isize
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
    }
    if !converged {
        return None;
    }
    let (prev, cur, next) = (&dog[layer - 1], &dog[layer], &dog[layer + 1]);
    let g = [
        0.5 * (cur.get(x + 1, y) - cur.get(x - 1, y)),
        0.5 * (cur.get(x, y + 1) - cur.get(x, y - 1)),
        0.5 * (next.get(x, y) - prev.get(x, y)),
    ];
    let contrast = cur.get(x, y) + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
    if contrast.abs() * (s as f32) < config.contrast_threshold {
        return None;
    }
    let v2 = 2.0 * cur.get(x, y);
    let dxx = cur.get(x + 1, y) + cur.get(x - 1, y) - v2;
    let dyy = cur.get(x, y + 1) + cur.get(x, y - 1) - v2;
    let dxy = 0.25 * (cur.get(x + 1, y + 1) - cur.get(x - 1, y + 1) - cur.get(x + 1, y - 1) + cur.get(x - 1, y - 1));
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = config.edge_threshold;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }
    let k = 2f32.powf(1.0 / s as f32);
    Some(Candidate {
        octave: o,
        layer,
        x: x as f32 + offset[0],
        y: y as f32 + offset[1],
        sigma: pyr.level_sigma[0] * k.powf(layer as f32 + offset[2]),
        response: contrast.abs(),
    })
}

fn gradient(img: &GrayImage, x: usize, y: usize) -> (f32, f32) {
    (
        img.get(x + 1, y) - img.get(x - 1, y),
        img.get(x, y - 1) - img.get(x, y + 1),
    )
}

/// Dominant gradient orientations around the candidate, in radians within
/// `[0, 2pi)`. Image y points down; angles are measured with y up, as in
/// the usual SIFT convention.
fn dominant_orientations(img: &GrayImage, c: &Candidate) -> Vec<f32> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let sigma = ORI_SIG_FACTOR * c.sigma;
    let radius = (ORI_RADIUS_FACTOR * c.sigma).round() as isize;
    let (cx, cy) = (c.x.round() as isize, c.y.round() as isize);
    let weight_scale = -1.0 / (2.0 * sigma * sigma);
    let mut hist = [0f32; ORI_HIST_BINS];
    for dy in -radius..=radius {
        let y = cy + dy;
        if y <= 0 || y >= h - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let x = cx + dx;
            if x <= 0 || x >= w - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, x as usize, y as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let ang = gy.atan2(gx);
            let weight = ((dx * dx + dy * dy) as f32 * weight_scale).exp();
            let bin = ((ORI_HIST_BINS as f32 * (ang + PI) / (2.0 * PI)).round() as usize) % ORI_HIST_BINS;
            // Bin 0 holds angle -pi, i.e. pi.
            hist[bin] += weight * mag;
        }
    }
    // Smooth with a [1 4 6 4 1] kernel, circularly.
    let n = ORI_HIST_BINS;
    let smooth: Vec<f32> = (0..n)
        .map(|i| {
            (hist[(i + n - 2) % n] + hist[(i + 2) % n]) / 16.0
                + (hist[(i + n - 1) % n] + hist[(i + 1) % n]) * 4.0 / 16.0
                + hist[i] * 6.0 / 16.0
        })
        .collect();
    let max = smooth.iter().cloned().fold(0.0, f32::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let l = smooth[(i + n - 1) % n];
        let r = smooth[(i + 1) % n];
        let v = smooth[i];
        if v > l && v > r && v >= ORI_PEAK_RATIO * max {
            let interp = i as f32 + 0.5 * (l - r) / (l - 2.0 * v + r);
            let ang = interp * 2.0 * PI / n as f32 - PI;
            out.push(ang.rem_euclid(2.0 * PI));
        }
    }
    out
}

fn describe(img: &GrayImage, c: &Candidate, angle: f32) -> Option<[f32; DESCRIPTOR_DIM]> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let d = DESC_WIDTH as isize;
    let hist_width = DESC_SCALE * c.sigma;
    let radius = ((hist_width * std::f32::consts::SQRT_2 * (d as f32 + 1.0) * 0.5).round() as isize).min(w * w + h * h);
    let (cos_t, sin_t) = (angle.cos() / hist_width, angle.sin() / hist_width);
    let exp_scale = -1.0 / (d as f32 * d as f32 * 0.5);
    let bins_per_rad = DESC_BINS as f32 / (2.0 * PI);
    let (cx, cy) = (c.x.round() as isize, c.y.round() as isize);

    let mut hist = [0f32; (DESC_WIDTH + 2) * (DESC_WIDTH + 2) * (DESC_BINS + 2)];
    let idx = |r: usize, c: usize, o: usize| (r * (DESC_WIDTH + 2) + c) * (DESC_BINS + 2) + o;

    for dy in -radius..=radius {
        for dx in -radius..=radius {
            // Rotate into the keypoint frame; y up to match the orientation
            // convention.
            let (fx, fy) = (dx as f32, -(dy as f32));
            let c_rot = fx * cos_t + fy * sin_t;
            let r_rot = -fx * sin_t + fy * cos_t;
            let rbin = -r_rot + d as f32 / 2.0 - 0.5;
            let cbin = c_rot + d as f32 / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= d as f32 || cbin <= -1.0 || cbin >= d as f32 {
                continue;
            }
            let (x, y) = (cx + dx, cy + dy);
            if x <= 0 || x >= w - 1 || y <= 0 || y >= h - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, x as usize, y as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let ori = (gy.atan2(gx) - angle).rem_euclid(2.0 * PI);
            let weight = ((c_rot * c_rot + r_rot * r_rot) * exp_scale).exp();
            let obin = ori * bins_per_rad;

            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (rf, cf, of) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = (r0 as isize, c0 as isize);
            let o0 = (o0 as usize) % DESC_BINS;
            let v = mag * weight;
            for (ri, rw) in [(0isize, 1.0 - rf), (1, rf)] {
                for (ci, cw) in [(0isize, 1.0 - cf), (1, cf)] {
                    for (oi, ow) in [(0usize, 1.0 - of), (1, of)] {
                        let rr = (r0 + ri + 1) as usize;
                        let cc = (c0 + ci + 1) as usize;
                        hist[idx(rr, cc, o0 + oi)] += v * rw * cw * ow;
                    }
                }
            }
        }
    }

    let mut desc = [0f32; DESCRIPTOR_DIM];
    for r in 0..DESC_WIDTH {
        for cidx in 0..DESC_WIDTH {
            // Wrap the extra orientation bin.
            let wrap = hist[idx(r + 1, cidx + 1, DESC_BINS)];
            for o in 0..DESC_BINS {
                let mut v = hist[idx(r + 1, cidx + 1, o)];
                if o == 0 {
                    v += wrap;
                }
                desc[(r * DESC_WIDTH + cidx) * DESC_BINS + o] = v;
            }
        }
    }
    normalize(&mut desc)?;
    desc.iter_mut().for_each(|v| *v = v.min(DESC_CLAMP));
    normalize(&mut desc)?;
    Some(desc)
}

fn normalize(v: &mut [f32]) -> Option<()> {
    let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return None;
    }
    v.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{match_features, MatchConfig};
    use crate::synthetic::ValueNoise;

    fn textured(w: usize, h: usize, seed: u64) -> GrayImage {
        let noise = ValueNoise::new(seed, 32.0, 5);
        GrayImage::from_fn(w, h, |x, y| noise.sample(x as f64 + 0.5, y as f64 + 0.5) as f32)
    }

    #[test]
    fn constant_image_has_no_keypoints() {
        let img = GrayImage::filled(456, 256, 0.5);
        assert!(detect_and_describe(&img, &SiftConfig::default()).is_empty());
    }

    #[test]
    fn detection_is_deterministic_and_capped() {
        let img = textured(456, 256, 1);
        let a = detect_and_describe(&img, &SiftConfig::default());
        let b = detect_and_describe(&img, &SiftConfig::default());
        assert!(a.len() > 100, "only {} keypoints", a.len());
        assert_eq!(a, b);
        let capped = detect_and_describe(
            &img,
            &SiftConfig {
                max_features: 50,
                ..Default::default()
            },
        );
        assert_eq!(capped.len(), 50);
        assert_eq!(capped.keypoints(), &a.keypoints()[..50]);
        for kp in a.keypoints() {
            assert!(kp.x >= 0.0 && kp.x < 456.0 && kp.y >= 0.0 && kp.y < 256.0 && kp.scale > 0.0);
        }
    }

    #[test]
    fn every_keypoint_matches_itself() {
        let img = textured(456, 256, 2);
        let f = detect_and_describe(&img, &SiftConfig::default());
        for i in 0..f.len() {
            let best = (0..f.len())
                .map(|j| (squared(f.descriptor(i), f.descriptor(j)), j))
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .unwrap();
            assert_eq!(best.0, 0.0);
            assert!(best.1 == i || f.descriptor(best.1) == f.descriptor(i));
        }
    }

    fn squared(a: &[f32], b: &[f32]) -> f32 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn rotation_by_90_degrees_is_repeatable() {
        let img = textured(456, 256, 3);
        let rot = img.rotate90();
        let cfg = SiftConfig::default();
        let fa = detect_and_describe(&img, &cfg);
        let fb = detect_and_describe(&rot, &cfg);
        let m = match_features(
            &fa,
            &fb,
            &MatchConfig {
                ratio: 0.8,
                mutual: true,
            },
        );
        // Oracle: a point (u, v) maps to (h - v, u) under the rotation.
        let h = img.height() as f32;
        let good = m
            .pairs
            .iter()
            .filter(|p| {
                let ka = fa.keypoints()[p.a];
                let kb = fb.keypoints()[p.b];
                let (ex, ey) = (h - ka.y, ka.x);
                ((kb.x - ex).powi(2) + (kb.y - ey).powi(2)).sqrt() <= 2.0
            })
            .count();
        let frac = good as f64 / fa.len() as f64;
        assert!(frac >= 0.5, "{good}/{} keypoints repeat under rotation", fa.len());
    }
}
