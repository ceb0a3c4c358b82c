use serde::{Deserialize, Serialize};

/// Seeded multi-octave value noise.
///
/// Each octave is a lattice of pseudo-random values (hashed from the seed and
/// lattice coordinates, so the domain is unbounded) sampled bilinearly.
/// Output lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNoise {
    pub seed: u64,
    /// Lattice spacing of the coarsest octave, in texture units.
    pub cell: f64,
    pub octaves: u32,
    /// Amplitude ratio between successive octaves.
    pub gain: f64,
    /// Contrast stretch about 0.5 applied after summing octaves.
    #[serde(default = "default_contrast")]
    pub contrast: f64,
}

fn default_contrast() -> f64 {
    1.8
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ValueNoise {
    pub fn new(seed: u64, cell: f64, octaves: u32) -> Self {
        ValueNoise {
            seed,
            cell,
            octaves,
            gain: 0.65,
            contrast: default_contrast(),
        }
    }

    fn lattice(&self, octave: u32, ix: i64, iy: i64) -> f64 {
        let h = splitmix(self.seed ^ splitmix((octave as u64) << 48 ^ splitmix(ix as u64 ^ splitmix(iy as u64))));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let mut total = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        let mut cell = self.cell;
        for o in 0..self.octaves {
            let (x, y) = (u / cell, v / cell);
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let (ix, iy) = (x0 as i64, y0 as i64);
            let a = self.lattice(o, ix, iy);
            let b = self.lattice(o, ix + 1, iy);
            let c = self.lattice(o, ix, iy + 1);
            let d = self.lattice(o, ix + 1, iy + 1);
            let top = a + (b - a) * fx;
            let bot = c + (d - c) * fx;
            total += amp * (top + (bot - top) * fy);
            norm += amp;
            amp *= self.gain;
            cell *= 0.5;
        }
        let v = total / norm;
        (0.5 + (v - 0.5) * self.contrast).clamp(0.0, 1.0)
    }
}
