use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "run_manifest.json";

/// Record of one command run, stored in its output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    /// Input path to SHA-256 of its contents (directories hash every file
    /// below them, in path order).
    pub inputs: BTreeMap<String, String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub tool_versions: BTreeMap<String, String>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn hash_file(hasher: &mut Sha256, path: &Path) -> Result<(), CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        hasher.update(&buf[..n]);
    }
}

fn files_below(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_dir() {
            files_below(&path, out)?;
        } else if path.file_name().is_some_and(|n| n != MANIFEST_NAME) {
            out.push(path);
        }
    }
    Ok(())
}

/// Hex SHA-256 of a file, or of every file below a directory together with
/// its relative path.
pub fn hash_input(path: &Path) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        files_below(path, &mut files)?;
        files.sort();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f);
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0u8]);
            hash_file(&mut hasher, &f)?;
        }
    } else {
        hash_file(&mut hasher, path)?;
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// A run in progress. [`Run::begin`] also returns the manifest of an
/// identical run that already completed in the same directory, if any.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn begin(
        dir: &Path,
        command: &str,
        config: &impl Serialize,
        inputs: &[&Path],
        extra_versions: &[(&str, String)],
    ) -> Result<(Run, Option<RunManifest>), CliError> {
        let mut hashes = BTreeMap::new();
        for p in inputs {
            hashes.insert(p.display().to_string(), hash_input(p)?);
        }
        let mut tool_versions = BTreeMap::from([("egofields".to_string(), env!("CARGO_PKG_VERSION").to_string())]);
        for (k, v) in extra_versions {
            tool_versions.insert(k.to_string(), v.clone());
        }
        let manifest = RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: serde_json::to_value(config).expect("configuration serialises"),
            inputs: hashes,
            outputs: Vec::new(),
            tool_versions,
            started_unix: now(),
            finished_unix: None,
        };
        let previous = read_manifest(dir).filter(|prev| {
            prev.finished_unix.is_some()
                && prev.outputs.iter().all(|o| dir.join(o).exists())
                && prev.command == manifest.command
                && prev.config == manifest.config
                && prev.inputs == manifest.inputs
        });
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let run = Run {
            dir: dir.to_path_buf(),
            manifest,
        };
        Ok((run, previous))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `bytes` to `name` inside the output directory and records it.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(name);
        Ok(path)
    }

    /// Writes `bytes` to a caller-chosen path, recorded relative to the
    /// output directory when it lies directly inside it.
    pub fn write_at(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        let name = self.name_of(path);
        self.record(&name);
        Ok(())
    }

    pub fn name_of(&self, path: &Path) -> String {
        if parent_dir(path) == self.dir {
            if let Some(n) = path.file_name() {
                return n.to_string_lossy().into_owned();
            }
        }
        std::path::absolute(path)
            .unwrap_or_else(|_| path.to_path_buf())
            .display()
            .to_string()
    }

    /// Records a file written by other means.
    pub fn record(&mut self, name: &str) {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
    }

    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.finished_unix = Some(now());
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        egofields::recon_io::atomic_write(&path, text.as_bytes())?;
        Ok(self.manifest)
    }
}

/// Directory of `path`, with `.` for bare file names.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn read_manifest(dir: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME)).ok()?;
    serde_json::from_str(&text).ok()
}
