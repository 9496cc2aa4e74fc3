//! Settings file, `protobooth.toml` by default:
//!
//! ```toml
//! data_dir = "/var/lib/protobooth"
//! bind = "0.0.0.0:8080"
//! server = "http://127.0.0.1:8080"
//! ```
//!
//! Command-line flags win over environment variables, which win over the
//! file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::output::CliError;

pub const DEFAULT_DATA_DIR: &str = "protobooth-data";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_CONFIG: &str = "protobooth.toml";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub bind: Option<String>,
    pub server: Option<String>,
}

impl FileConfig {
    /// `explicit` must exist; the default file is optional.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let (path, required) = match explicit {
            Some(p) => (p.to_owned(), true),
            None => (PathBuf::from(DEFAULT_CONFIG), false),
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(CliError::config(format!("reading {}: {e}", path.display()))),
        };
        toml::from_str(&text).map_err(|e| CliError::config(format!("parsing {}: {e}", path.display())))
    }

    pub fn data_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.data_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
    }

    pub fn bind(&self, flag: Option<String>) -> Result<SocketAddr, CliError> {
        let text = flag
            .or_else(|| self.bind.clone())
            .unwrap_or_else(|| DEFAULT_BIND.to_owned());
        text.parse()
            .map_err(|_| CliError::config(format!("bind address {text:?} is not host:port")))
    }

    pub fn server(&self, flag: Option<String>) -> Option<String> {
        flag.or_else(|| self.server.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let f: FileConfig = toml::from_str("data_dir = \"/d\"\nbind = \"0.0.0.0:9\"\n").unwrap();
        assert_eq!(f.data_dir(None), PathBuf::from("/d"));
        assert_eq!(f.data_dir(Some("/x".into())), PathBuf::from("/x"));
        assert_eq!(f.bind(None).unwrap().port(), 9);
        assert!(f.bind(Some("nope".into())).is_err());
        assert_eq!(FileConfig::default().data_dir(None), PathBuf::from(DEFAULT_DATA_DIR));
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
    }
}
