//! Booth configuration file (TOML).
//!
//! ```toml
//! booth_id = "booth-1"
//! server = "http://127.0.0.1:8080"
//! spool_dir = "/var/lib/protobooth/spool"
//! frame_latency_ms = 1250
//! notify_interval_secs = 5
//! timezone = "Europe/Oslo"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use protobooth_core::BoothId;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("booth_id {0:?} is not a valid identifier")]
    BadBoothId(String),
}

fn default_latency() -> u64 {
    crate::rig::DEFAULT_FRAME_LATENCY.as_millis() as u64
}

fn default_notify() -> u64 {
    crate::node::DEFAULT_NOTIFY_INTERVAL.as_secs()
}

fn default_tz() -> String {
    "UTC".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub booth_id: BoothId,
    /// Base URL of the backend, e.g. `http://127.0.0.1:8080`.
    pub server: String,
    pub spool_dir: PathBuf,
    /// Simulated per-camera acquisition time of the mock rig.
    #[serde(default = "default_latency")]
    pub frame_latency_ms: u64,
    #[serde(default = "default_notify")]
    pub notify_interval_secs: u64,
    /// Display timezone, IANA name.
    #[serde(default = "default_tz")]
    pub timezone: String,
}

impl NodeConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: NodeConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_owned(),
            source,
        })?;
        if !cfg.booth_id.is_path_safe() {
            return Err(ConfigError::BadBoothId(cfg.booth_id.to_string()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn frame_latency(&self) -> Duration {
        Duration::from_millis(self.frame_latency_ms)
    }

    pub fn notify_interval(&self) -> Duration {
        Duration::from_secs(self.notify_interval_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply() {
        let cfg = NodeConfig::parse(
            "booth_id = \"b1\"\nserver = \"http://x\"\nspool_dir = \"/tmp/s\"\n",
            Path::new("node.toml"),
        )
        .unwrap();
        assert_eq!(cfg.frame_latency(), Duration::from_millis(1250));
        assert_eq!(cfg.notify_interval(), Duration::from_secs(5));
        assert_eq!(cfg.timezone, "UTC");
    }

    #[test]
    fn rejects_unsafe_booth_id() {
        let err = NodeConfig::parse(
            "booth_id = \"a/b\"\nserver = \"http://x\"\nspool_dir = \"/tmp/s\"\n",
            Path::new("node.toml"),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadBoothId(_)));
    }
}
