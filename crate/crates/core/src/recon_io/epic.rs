//! Lightweight JSON export: one shared camera, per-frame poses and the
//! sparse point positions.
//!
//! ```json
//! {
//!   "camera": {"model": "PINHOLE", "width": 456, "height": 256, "params": [...]},
//!   "images": {"frame_0000000001.png": [qw, qx, qy, qz, tx, ty, tz], ...},
//!   "points": [[x, y, z], ...],
//!   "total_frames": 1000
//! }
//! ```
//!
//! `total_frames` is optional and defaults to the number of images. Tracks,
//! colours and frame ids are not stored; on read frames get ids `1..=N` in
//! name order and points get ids `1..=M`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::Point3;
use serde_json::{json, Map, Value};

use super::{atomic_write, ReconError};
use crate::geometry::{CameraIntrinsics, CameraModel, Reconstruction, RegisteredFrame, RigidPose, SparsePoint};

fn schema(path: &str, message: impl Into<String>) -> ReconError {
    ReconError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn number(v: &Value, path: &str) -> Result<f64, ReconError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn unsigned(v: &Value, path: &str) -> Result<u64, ReconError> {
    v.as_u64()
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn numbers<const N: usize>(v: &Value, path: &str) -> Result<[f64; N], ReconError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(path, format!("expected an array of {N} numbers")))?;
    if arr.len() != N {
        return Err(schema(path, format!("expected {N} numbers, found {}", arr.len())));
    }
    let mut out = [0.0; N];
    for (k, x) in arr.iter().enumerate() {
        out[k] = number(x, &format!("{path}[{k}]"))?;
    }
    Ok(out)
}

/// Builds a reconstruction from a parsed JSON document.
pub fn epic_from_value(doc: &Value) -> Result<Reconstruction, ReconError> {
    let root = doc.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    for key in root.keys() {
        if !matches!(key.as_str(), "camera" | "images" | "points" | "total_frames") {
            return Err(schema(&format!("$.{key}"), "unknown key"));
        }
    }

    let cam = root
        .get("camera")
        .ok_or_else(|| schema("$.camera", "missing"))?
        .as_object()
        .ok_or_else(|| schema("$.camera", "expected an object"))?;
    let model_name = cam
        .get("model")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("$.camera.model", "expected a string"))?;
    let model: CameraModel = model_name
        .parse()
        .map_err(|_| schema("$.camera.model", format!("unknown camera model {model_name:?}")))?;
    let dim = |key: &str| -> Result<u32, ReconError> {
        let path = format!("$.camera.{key}");
        let v = unsigned(cam.get(key).unwrap_or(&Value::Null), &path)?;
        u32::try_from(v).map_err(|_| schema(&path, "out of range"))
    };
    let (width, height) = (dim("width")?, dim("height")?);
    let params = cam
        .get("params")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("$.camera.params", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(k, v)| number(v, &format!("$.camera.params[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let camera = CameraIntrinsics::new(model, width, height, params).map_err(|e| schema("$.camera", e.to_string()))?;

    let images = root
        .get("images")
        .ok_or_else(|| schema("$.images", "missing"))?
        .as_object()
        .ok_or_else(|| schema("$.images", "expected an object"))?;
    let mut names: Vec<&String> = images.keys().collect();
    names.sort();
    let mut frames = Vec::with_capacity(names.len());
    for (k, name) in names.into_iter().enumerate() {
        let path = format!("$.images[{}]", serde_json::to_string(name).unwrap_or_default());
        let v: [f64; 7] = numbers(&images[name], &path)?;
        let pose = RigidPose::from_components([v[0], v[1], v[2], v[3]], [v[4], v[5], v[6]])
            .map_err(|e| schema(&path, e.to_string()))?;
        frames.push(RegisteredFrame::new(k as u32 + 1, name.clone(), 1, pose));
    }

    let points = match root.get("points") {
        None => Vec::new(),
        Some(v) => v
            .as_array()
            .ok_or_else(|| schema("$.points", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let [x, y, z] = numbers::<3>(p, &format!("$.points[{k}]"))?;
                Ok(SparsePoint::new(k as u64 + 1, Point3::new(x, y, z)))
            })
            .collect::<Result<Vec<_>, ReconError>>()?,
    };

    let total = match root.get("total_frames") {
        None => frames.len(),
        Some(v) => unsigned(v, "$.total_frames")? as usize,
    };
    if total < frames.len() {
        return Err(schema(
            "$.total_frames",
            format!("{total} is less than the {} registered frames", frames.len()),
        ));
    }
    let recon = Reconstruction {
        cameras: BTreeMap::from([(1, camera)]),
        frames,
        points,
        total_frame_count: total,
    };
    recon.validate()?;
    Ok(recon)
}

/// Serialises `recon`, which must use exactly one camera.
pub fn epic_to_value(recon: &Reconstruction) -> Result<Value, ReconError> {
    let mut cams = recon.cameras.values();
    let camera = match (cams.next(), cams.next()) {
        (Some(c), None) => c,
        _ => {
            return Err(ReconError::Unrepresentable(format!(
                "the JSON format holds exactly one camera, found {}",
                recon.cameras.len()
            )))
        }
    };
    let mut images = Map::new();
    let mut frames: Vec<&RegisteredFrame> = recon.frames.iter().collect();
    frames.sort_by(|a, b| a.name.cmp(&b.name));
    for f in frames {
        let q = f.pose.quaternion_components();
        let t = f.pose.translation_components();
        if images
            .insert(f.name.clone(), json!([q[0], q[1], q[2], q[3], t[0], t[1], t[2]]))
            .is_some()
        {
            return Err(ReconError::Unrepresentable(format!(
                "duplicate frame name {:?}",
                f.name
            )));
        }
    }
    let points: Vec<Value> = recon
        .points
        .iter()
        .map(|p| json!([p.position.x, p.position.y, p.position.z]))
        .collect();
    Ok(json!({
        "camera": {
            "model": camera.model().colmap_name(),
            "width": camera.width(),
            "height": camera.height(),
            "params": camera.params(),
        },
        "images": images,
        "points": points,
        "total_frames": recon.total_frame_count,
    }))
}

pub fn read_epic_fields_json(path: &Path) -> Result<Reconstruction, ReconError> {
    let text = fs::read_to_string(path).map_err(|e| ReconError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| schema("$", e.to_string()))?;
    epic_from_value(&doc)
}

pub fn write_epic_fields_json(recon: &Reconstruction, path: &Path) -> Result<(), ReconError> {
    let doc = epic_to_value(recon)?;
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialise");
    text.push('\n');
    atomic_write(path, text.as_bytes())
}
