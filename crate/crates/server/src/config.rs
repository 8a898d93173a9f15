use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use covermine::agent::AgentConfig;
use covermine::blackboard::BoardConfig;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("bad config: {0}")]
    Invalid(String),
}

/// Settings of `covermine serve`, read from TOML. Relative paths are taken
/// relative to the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Resume from a snapshot instead of loading `data`.
    pub snapshot: Option<PathBuf>,
    pub log: Option<PathBuf>,
    /// Directory with the built web UI.
    pub ui: Option<PathBuf>,
    pub base_seed: u64,
    pub board: BoardConfig,
    pub agent: AgentConfig,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            addr: ([127, 0, 0, 1], 7878).into(),
            data: None,
            schema: None,
            snapshot: None,
            log: None,
            ui: None,
            base_seed: 0,
            board: BoardConfig::default(),
            agent: AgentConfig::default(),
        }
    }
}

impl ServeConfig {
    pub fn load(path: &Path) -> Result<ServeConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ServeConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.data,
            &mut config.schema,
            &mut config.snapshot,
            &mut config.log,
            &mut config.ui,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.data.is_none() && self.snapshot.is_none() {
            return Err(ConfigError::Invalid("give `data` or `snapshot`".into()));
        }
        self.agent.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }
}
