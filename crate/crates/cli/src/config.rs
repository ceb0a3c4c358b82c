use std::path::{Path, PathBuf};

use egofields::benchmark::SplitConfig;
use egofields::filtering::FilterConfig;
use egofields::geometry::CameraModel;
use egofields::propagation::PropagationConfig;
use egofields::recon_io::{OrchestrateConfig, SubprocessSfm, VerifyConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every tunable of the tool. Values come from defaults, then the
/// `--config` file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Worker threads; unset means one per core.
    pub threads: Option<usize>,
    pub camera_model: CameraModel,
    pub workdir: PathBuf,
    /// Frame rate used to derive timestamps from frame numbers.
    pub fps: f64,
    pub filter: FilterConfig,
    pub verify: VerifyConfig,
    pub propagation: PropagationConfig,
    pub split: SplitConfig,
    pub sfm: Option<SubprocessSfm>,
}

impl Default for Config {
    fn default() -> Self {
        let orch = OrchestrateConfig::default();
        Config {
            threads: None,
            camera_model: orch.camera_model,
            workdir: orch.workdir,
            fps: 50.0,
            filter: FilterConfig::default(),
            verify: VerifyConfig::default(),
            propagation: PropagationConfig::default(),
            split: SplitConfig::default(),
            sfm: None,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))
    }

    /// Applies the global seed to every seeded component.
    pub fn set_seed(&mut self, seed: u64) {
        self.filter.ransac.seed = seed;
        self.propagation.seed = seed;
        self.split.seed = seed;
    }

    pub fn orchestrate(&self) -> OrchestrateConfig {
        OrchestrateConfig {
            filter: self.filter.clone(),
            verify: self.verify,
            camera_model: self.camera_model,
            workdir: self.workdir.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

pub fn parse_camera_model(s: &str) -> Result<CameraModel, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase()))
        .map_err(|_| format!("unknown camera model {s:?}"))
}
