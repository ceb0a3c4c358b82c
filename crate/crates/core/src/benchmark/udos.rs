use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::Deserialize;

use super::BenchmarkError;
use crate::propagation::BinaryMask;

/// One annotated object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub object_id: u32,
    pub mask: BinaryMask,
    /// Currently held or moved by a visible hand.
    pub contact: Option<bool>,
    /// Moved at some earlier point of the video.
    pub moved: Option<bool>,
    pub body_part: Option<bool>,
}

/// Ground-truth masks of the three dynamic-object definitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UdosVariants {
    /// Objects in contact.
    pub a: BTreeMap<String, BinaryMask>,
    /// `a` plus objects moved earlier.
    pub b: BTreeMap<String, BinaryMask>,
    /// `b` without body-part pixels.
    pub c: BTreeMap<String, BinaryMask>,
    /// Frames left out because an object lacked a flag.
    pub skipped: Vec<String>,
}

/// Builds the three variant masks for every frame.
///
/// A frame whose objects are all fully flagged gets three masks of size
/// `width x height` (empty when it has no annotations). A frame with any
/// missing flag is skipped with a warning.
pub fn udos_mask_variants(
    frames: &BTreeMap<String, Vec<AnnotatedObject>>,
    width: usize,
    height: usize,
) -> Result<UdosVariants, BenchmarkError> {
    let mut out = UdosVariants::default();
    for (name, objects) in frames {
        let mut flags = Vec::with_capacity(objects.len());
        for o in objects {
            match (o.contact, o.moved, o.body_part) {
                (Some(c), Some(m), Some(b)) => flags.push((c, m, b)),
                _ => break,
            }
        }
        if flags.len() != objects.len() {
            warn!("frame {name}: an object lacks contact/moved/body-part flags; skipped");
            out.skipped.push(name.clone());
            continue;
        }
        let mut a = BinaryMask::empty(width, height, 0);
        let mut b = BinaryMask::empty(width, height, 0);
        let mut body = BinaryMask::empty(width, height, 0);
        for (o, &(contact, moved, body_part)) in objects.iter().zip(&flags) {
            if o.mask.width() != width || o.mask.height() != height {
                return Err(BenchmarkError::Input(format!(
                    "frame {name}: object {} mask is {}x{}, expected {width}x{height}",
                    o.object_id,
                    o.mask.width(),
                    o.mask.height()
                )));
            }
            if contact {
                a = a.union(&o.mask)?;
            }
            if contact || moved {
                b = b.union(&o.mask)?;
            }
            if body_part {
                body = body.union(&o.mask)?;
            }
        }
        let c = b.difference(&body)?;
        out.a.insert(name.clone(), a);
        out.b.insert(name.clone(), b);
        out.c.insert(name.clone(), c);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationFile {
    width: usize,
    height: usize,
    frames: BTreeMap<String, Vec<ObjectEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    object_id: u32,
    /// Relative to the annotation file.
    mask: PathBuf,
    contact: Option<bool>,
    moved: Option<bool>,
    body_part: Option<bool>,
}

/// Reads `{width, height, frames: {name: [{object_id, mask, contact, moved,
/// body_part}]}}`; mask paths are resolved against the file's directory.
pub fn load_udos_annotations(
    path: &Path,
) -> Result<(usize, usize, BTreeMap<String, Vec<AnnotatedObject>>), BenchmarkError> {
    let file_err = |message: String| BenchmarkError::File {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    let parsed: AnnotationFile = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut frames = BTreeMap::new();
    for (name, entries) in parsed.frames {
        let mut objects = Vec::with_capacity(entries.len());
        for e in entries {
            objects.push(AnnotatedObject {
                object_id: e.object_id,
                mask: BinaryMask::open(&base.join(&e.mask), e.object_id)?,
                contact: e.contact,
                moved: e.moved,
                body_part: e.body_part,
            });
        }
        frames.insert(name, objects);
    }
    Ok((parsed.width, parsed.height, frames))
}
