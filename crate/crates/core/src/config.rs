//! Run configuration: one JSON document, secrets from the environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::live::LiveConfig;
use crate::corpus::{BackendKind, DEFAULT_HORIZON_YEAR};
use crate::model::FeatureConfig;
use crate::profile::KeywordConfig;
use crate::trend::TrendParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// JSONL term records.
    pub vocabulary: PathBuf,
    /// JSON map from year to new-term uis.
    pub new_terms: PathBuf,
    /// JSONL article fixture; required for the fixture backend.
    pub corpus: Option<PathBuf>,
    pub backend: BackendKind,
    pub live: LiveConfig,
    pub horizon_year: i32,
    pub trend: TrendParams,
    pub keywords: KeywordConfig,
    pub features: FeatureConfig,
    pub folds: usize,
    /// Forecasting years evaluated by the sweep, 1 through this value.
    pub forecast_years: u32,
    pub seed: u64,
    /// Where outputs go; not part of the recorded configuration, so runs
    /// that differ only in destination produce identical artifacts.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            vocabulary: PathBuf::from("vocabulary.jsonl"),
            new_terms: PathBuf::from("new_terms.json"),
            corpus: Some(PathBuf::from("corpus.jsonl")),
            backend: BackendKind::Fixture,
            live: LiveConfig::default(),
            horizon_year: DEFAULT_HORIZON_YEAR,
            trend: TrendParams::default(),
            keywords: KeywordConfig::default(),
            features: FeatureConfig::default(),
            folds: 5,
            forecast_years: 10,
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: display, source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.vocabulary = resolve(base, &cfg.vocabulary);
        cfg.new_terms = resolve(base, &cfg.new_terms);
        cfg.corpus = cfg.corpus.as_deref().map(|c| resolve(base, c));
        cfg.out_dir = resolve(base, &cfg.out_dir);
        cfg.live = cfg.live.with_env_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.trend
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.folds < 2 {
            return Err(ConfigError::Invalid(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.forecast_years < 1 {
            return Err(ConfigError::Invalid("forecast_years must be at least 1".into()));
        }
        if self.backend == BackendKind::Fixture && self.corpus.is_none() {
            return Err(ConfigError::Invalid("fixture backend needs a corpus path".into()));
        }
        Ok(())
    }

    /// Short digest of the effective configuration (API key excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"seed": 7, "trend": {"threshold": 30}}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trend.threshold, 30);
        assert_eq!(cfg.trend.dip_len, 2);
        assert_eq!(cfg.horizon_year, 2019);
        assert_eq!(cfg.vocabulary, dir.path().join("vocabulary.jsonl"));
    }

    #[test]
    fn hash_tracks_content_not_key() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.live.api_key = Some("secret".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.seed = a.seed;
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_configs() {
        let cfg = RunConfig {
            folds: 1,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            corpus: None,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
