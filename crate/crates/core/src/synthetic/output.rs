use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{SyntheticError, SyntheticScene};

/// Files written by [`write_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLayout {
    pub images: PathBuf,
    pub masks: PathBuf,
    pub scene: PathBuf,
}

impl SequenceLayout {
    pub fn under(dir: &Path) -> Self {
        SequenceLayout {
            images: dir.join("images"),
            masks: dir.join("masks"),
            scene: dir.join("scene.json"),
        }
    }

    /// Directory holding the ground-truth masks of one object.
    pub fn object_masks(&self, object_id: u32) -> PathBuf {
        self.masks.join(format!("obj_{object_id:03}"))
    }
}

/// Renders every frame into `dir/images/`, writes per-object ground-truth
/// masks into `dir/masks/obj_NNN/` and the scene description to
/// `dir/scene.json`. Frames are rendered in parallel.
pub fn write_sequence(scene: &SyntheticScene, dir: &Path) -> Result<SequenceLayout, SyntheticError> {
    scene.validate()?;
    let layout = SequenceLayout::under(dir);
    fs::create_dir_all(&layout.images)?;
    for o in &scene.objects {
        fs::create_dir_all(layout.object_masks(o.id))?;
    }
    (0..scene.len())
        .into_par_iter()
        .try_for_each(|i| -> Result<(), SyntheticError> {
            let frame = scene.render(i)?;
            let name = scene.frame_name(i);
            frame
                .image
                .save(&layout.images.join(&name))
                .map_err(|e| SyntheticError::Output(e.to_string()))?;
            for m in &frame.masks {
                m.save(&layout.object_masks(m.object_id).join(&name))
                    .map_err(|e| SyntheticError::Output(e.to_string()))?;
            }
            Ok(())
        })?;
    fs::write(&layout.scene, serde_json::to_string_pretty(scene)?)?;
    Ok(layout)
}

pub fn read_scene(path: &Path) -> Result<SyntheticScene, SyntheticError> {
    let scene: SyntheticScene = serde_json::from_str(&fs::read_to_string(path)?)?;
    scene.validate()?;
    Ok(scene)
}
