//! Optional TOML config file. Keys mirror the long flag names with
//! underscores (`map_size`, `ws_port`, ...); flags given on the command line
//! win over file values.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub map_size: Option<usize>,
    pub pieces: Option<usize>,
    pub order: Option<String>,
    pub feedback: Option<String>,
    pub out: Option<PathBuf>,
    pub port: Option<u16>,
    pub ws_port: Option<u16>,
    pub follower: Option<String>,
    pub split: Option<String>,
    pub tasks: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
    pub index: Option<usize>,
    pub scale: Option<u32>,
    pub idle_timeout: Option<u64>,
    pub session_ttl: Option<u64>,
    pub grace: Option<u64>,
    pub heartbeat: Option<u64>,
    pub log: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// `flag`, else `file`, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
