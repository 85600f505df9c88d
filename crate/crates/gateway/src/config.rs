//! Session configuration file.
//!
//! A single TOML document. `version` must be [`CONFIG_VERSION`]; every other
//! key is optional and falls back to the library defaults. Pipeline parameters
//! sit at the top level (`voxel_size`, `[ransac]`, `[dbscan]`, `[merge]`,
//! `[planner]`, ...). Only `listen_address` can be overridden from the
//! environment, through `NAVI_LISTEN_ADDRESS`.

use std::path::{Path, PathBuf};

use navi_core::PipelineConfig64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_VERSION: u32 = 1;
pub const LISTEN_ADDRESS_ENV: &str = "NAVI_LISTEN_ADDRESS";
pub const DEFAULT_LISTEN_ADDRESS: &str = "127.0.0.1:8080";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config is not valid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config version {found} is not supported (expected {CONFIG_VERSION})")]
    Version { found: u32 },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub version: u32,
    /// `host:port` the HTTP service binds to.
    pub listen_address: String,
    /// Frames allowed to wait for the map writer before POST /frames answers 503.
    pub queue_depth: usize,
    /// Request bodies above this many bytes are answered with 413.
    pub max_body_bytes: usize,
    pub replay_path: Option<PathBuf>,
    /// Directory of recorded directions responses, `<destination>.json`.
    pub fixtures_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub pipeline: PipelineConfig64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            listen_address: DEFAULT_LISTEN_ADDRESS.to_string(),
            queue_depth: 8,
            // a 320x288 f32 frame is ~490 KB once base64 encoded
            max_body_bytes: 4 << 20,
            replay_path: None,
            fixtures_dir: None,
            pipeline: PipelineConfig64::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        #[derive(Deserialize)]
        struct Header {
            version: Option<u32>,
        }
        let header: Header = toml::from_str(text)?;
        match header.version {
            Some(CONFIG_VERSION) => {}
            Some(found) => return Err(ConfigError::Version { found }),
            None => return Err(ConfigError::Invalid("missing `version`".into())),
        }
        let config: SessionConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Loads `path` if given, else the defaults, then applies the environment override.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(addr) = lookup(LISTEN_ADDRESS_ENV).filter(|a| !a.trim().is_empty()) {
            self.listen_address = addr.trim().to_string();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version { found: self.version });
        }
        if self.listen_address.rsplit_once(':').is_none_or(|(_, port)| port.parse::<u16>().is_err()) {
            return Err(ConfigError::Invalid(format!("listen_address `{}` is not host:port", self.listen_address)));
        }
        if self.queue_depth == 0 {
            return Err(ConfigError::Invalid("queue_depth must be at least 1".into()));
        }
        if self.max_body_bytes == 0 {
            return Err(ConfigError::Invalid("max_body_bytes must be positive".into()));
        }
        self.pipeline.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}
