//! Run configuration read from a TOML file, with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{HttpConfig, OracleSpec};
use crate::collab::KcmConfig;
use crate::data::LongTailSpec;
use crate::eval::ForgettingSpec;
use crate::models::ArchSpec;

/// Everything a command needs. Missing sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Required by `generate` and `train`, either here or via `--seed`.
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Where trained models are read from; defaults to `out`.
    pub models: Option<PathBuf>,
    pub data: DataSource,
    pub arch: ArchSpec,
    pub kcm: KcmConfig,
    pub backend: BackendConfig,
    pub forgetting: ForgettingSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("kcm-out"),
            models: None,
            data: DataSource::default(),
            arch: ArchSpec::default(),
            kcm: KcmConfig::default(),
            backend: BackendConfig::default(),
            forgetting: ForgettingSpec::default(),
        }
    }
}

/// A CSV file when `path` is set, otherwise the synthetic generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSource {
    pub path: Option<PathBuf>,
    /// Fixed label vocabulary for CSV input.
    pub labels: Option<Vec<String>>,
    pub generate: LongTailSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Oracle,
    Http,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub oracle: OracleSpec,
    pub http: HttpConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("serializing config: {0}")]
    Serialize(String),
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    pub fn models_dir(&self) -> &Path {
        self.models.as_deref().unwrap_or(&self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collab::KlDirection;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = RunConfig { seed: Some(7), ..Default::default() };
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::from_toml_str(
            "seed = 3\n[kcm]\nepsilon = 0.9\nkl_direction = \"teacher_first\"\n[backend]\nkind = \"http\"\n[backend.http]\nendpoint = \"http://localhost:9\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.kcm.epsilon, 0.9);
        assert_eq!(cfg.kcm.kl_direction, KlDirection::TeacherFirst);
        assert_eq!(cfg.kcm.batch_size, KcmConfig::default().batch_size);
        assert_eq!(cfg.backend.kind, BackendKind::Http);
        assert_eq!(cfg.backend.http.endpoint, "http://localhost:9");
    }

    #[test]
    fn unknown_enum_value_is_rejected() {
        assert!(RunConfig::from_toml_str("[kcm]\nschedule = \"sometimes\"\n").is_err());
    }
}
