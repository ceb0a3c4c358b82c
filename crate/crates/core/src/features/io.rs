//! Binary feature files for ingesting externally computed features.
//!
//! Layout, all little-endian:
//!
//! ```text
//! u32                      keypoint count N
//! N x [f32; 4]             x, y, scale, orientation
//! N x D x f32              descriptors, row-major
//! ```
//!
//! The descriptor dimension `D` is implied by the file length.

use std::fs;
use std::path::Path;

use super::{FeatureError, FeatureSet, Keypoint, DESCRIPTOR_DIM};

pub fn write_feature_file(path: &Path, set: &FeatureSet) -> Result<(), FeatureError> {
    let mut buf = Vec::with_capacity(4 + set.len() * 16 + set.descriptors().len() * 4);
    buf.extend_from_slice(&(set.len() as u32).to_le_bytes());
    for kp in set.keypoints() {
        for v in [kp.x, kp.y, kp.scale, kp.orientation] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in set.descriptors() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<FeatureSet, FeatureError> {
    let bytes = fs::read(path)?;
    let bad = |message: String| FeatureError::MalformedFile {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 4 {
        return Err(bad("missing keypoint count".into()));
    }
    let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let kp_bytes = count
        .checked_mul(16)
        .filter(|n| 4 + n <= bytes.len())
        .ok_or_else(|| bad(format!("{count} keypoints do not fit in {} bytes", bytes.len())))?;
    let floats = |range: &[u8]| -> Vec<f32> {
        range
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let kp_vals = floats(&bytes[4..4 + kp_bytes]);
    let rest = &bytes[4 + kp_bytes..];
    let dim = if count == 0 {
        if !rest.is_empty() {
            return Err(bad("descriptor data without keypoints".into()));
        }
        DESCRIPTOR_DIM
    } else {
        if rest.len() % (4 * count) != 0 {
            return Err(bad(format!(
                "{} descriptor bytes are not a whole number of rows for {count} keypoints",
                rest.len()
            )));
        }
        rest.len() / (4 * count)
    };
    let keypoints = kp_vals
        .chunks_exact(4)
        .map(|v| Keypoint {
            x: v[0],
            y: v[1],
            scale: v[2],
            orientation: v[3],
            response: 0.0,
        })
        .collect();
    FeatureSet::from_parts(keypoints, floats(rest), dim).map_err(|e| bad(e.to_string()))
}
