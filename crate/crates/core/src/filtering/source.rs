use std::fs;
use std::path::{Path, PathBuf};

use super::FilterError;
use crate::features::{FeatureError, FeatureSet, GrayImage};
use crate::synthetic::SyntheticScene;

/// An ordered sequence of frames that can be decoded independently.
pub trait FrameSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn name(&self, index: usize) -> String;

    /// Seconds from the start of the video, when known.
    fn timestamp(&self, _index: usize) -> Option<f64> {
        None
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError>;
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

/// Raster images in one directory, ordered by file name (zero-padded
/// indices sort correctly).
#[derive(Debug, Clone)]
pub struct ImageDirSource {
    paths: Vec<PathBuf>,
}

impl ImageDirSource {
    pub fn open(dir: &Path) -> Result<Self, FilterError> {
        let mut paths = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| FilterError::Source(format!("{}: {e}", dir.display())))? {
            let path = entry.map_err(|e| FilterError::Source(e.to_string()))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
                paths.push(path);
            }
        }
        paths.sort();
        Ok(ImageDirSource { paths })
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

impl FrameSource for ImageDirSource {
    fn len(&self) -> usize {
        self.paths.len()
    }

    fn name(&self, index: usize) -> String {
        file_name(&self.paths[index])
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError> {
        GrayImage::open(&self.paths[index])
    }
}

/// Frame list file: one `path timestamp` pair per line; relative paths are
/// resolved against the manifest's directory. Blank lines and lines starting
/// with `#` are ignored.
#[derive(Debug, Clone)]
pub struct ManifestSource {
    entries: Vec<(PathBuf, f64)>,
}

impl ManifestSource {
    pub fn open(path: &Path) -> Result<Self, FilterError> {
        let text = fs::read_to_string(path).map_err(|e| FilterError::Source(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, FilterError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (p, t) = line
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| FilterError::Source(format!("manifest line {}: expected `path timestamp`", n + 1)))?;
            let t: f64 = t
                .parse()
                .map_err(|_| FilterError::Source(format!("manifest line {}: bad timestamp {t:?}", n + 1)))?;
            let p = Path::new(p.trim());
            entries.push((if p.is_absolute() { p.to_path_buf() } else { base.join(p) }, t));
        }
        Ok(ManifestSource { entries })
    }
}

impl FrameSource for ManifestSource {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn name(&self, index: usize) -> String {
        file_name(&self.entries[index].0)
    }

    fn timestamp(&self, index: usize) -> Option<f64> {
        Some(self.entries[index].1)
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError> {
        GrayImage::open(&self.entries[index].0)
    }
}

/// Frames already decoded into memory.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    pub frames: Vec<(String, GrayImage)>,
}

impl FrameSource for MemorySource {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn name(&self, index: usize) -> String {
        self.frames[index].0.clone()
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError> {
        Ok(self.frames[index].1.clone())
    }
}

/// Every `stride`-th frame of another source.
pub struct Strided<'a> {
    inner: &'a dyn FrameSource,
    stride: usize,
}

impl<'a> Strided<'a> {
    pub fn new(inner: &'a dyn FrameSource, stride: usize) -> Self {
        Strided {
            inner,
            stride: stride.max(1),
        }
    }

    /// Index in the underlying source.
    pub fn source_index(&self, index: usize) -> usize {
        index * self.stride
    }
}

impl FrameSource for Strided<'_> {
    fn len(&self) -> usize {
        self.inner.len().div_ceil(self.stride)
    }

    fn name(&self, index: usize) -> String {
        self.inner.name(self.source_index(index))
    }

    fn timestamp(&self, index: usize) -> Option<f64> {
        self.inner.timestamp(self.source_index(index))
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError> {
        self.inner.load(self.source_index(index))
    }
}

impl FrameSource for SyntheticScene {
    fn len(&self) -> usize {
        self.trajectory.len()
    }

    fn name(&self, index: usize) -> String {
        self.frame_name(index)
    }

    fn timestamp(&self, index: usize) -> Option<f64> {
        Some(index as f64 / self.fps)
    }

    fn load(&self, index: usize) -> Result<GrayImage, FeatureError> {
        self.render(index)
            .map(|f| f.image)
            .map_err(|e| FeatureError::Invalid(e.to_string()))
    }
}

/// Per-frame features and the frame size they were computed on.
pub trait FeatureProvider: Sync {
    fn len(&self) -> usize;

    fn name(&self, index: usize) -> String;

    fn features(&self, index: usize) -> Result<(FeatureSet, usize, usize), FeatureError>;
}

/// Runs a detector on the frames of a source.
pub struct Extracting<'a> {
    pub source: &'a dyn FrameSource,
    pub detector: &'a dyn crate::features::Detector,
}

impl FeatureProvider for Extracting<'_> {
    fn len(&self) -> usize {
        self.source.len()
    }

    fn name(&self, index: usize) -> String {
        self.source.name(index)
    }

    fn features(&self, index: usize) -> Result<(FeatureSet, usize, usize), FeatureError> {
        let img = self.source.load(index)?;
        let set = crate::features::extract(self.detector, &img)?;
        Ok((set, img.width(), img.height()))
    }
}

/// Precomputed feature files, one per frame, for frames of a known size.
#[derive(Debug, Clone)]
pub struct FeatureFiles {
    pub paths: Vec<PathBuf>,
    pub width: usize,
    pub height: usize,
}

impl FeatureProvider for FeatureFiles {
    fn len(&self) -> usize {
        self.paths.len()
    }

    fn name(&self, index: usize) -> String {
        file_name(&self.paths[index])
    }

    fn features(&self, index: usize) -> Result<(FeatureSet, usize, usize), FeatureError> {
        Ok((
            crate::features::read_feature_file(&self.paths[index])?,
            self.width,
            self.height,
        ))
    }
}
