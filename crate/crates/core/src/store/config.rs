use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::extraction::DEFAULT_VALIDATED_FLOOR;
use crate::governance::DEFAULT_SLA_HOURS;
use crate::index::DEFAULT_DIMENSION;
use crate::ingestion::{DEFAULT_OVERLAP, DEFAULT_WINDOW};
use crate::query::{DEFAULT_K, DEFAULT_TOKEN_BUDGET};

use super::auth::TokenEntry;
use super::Error;

/// Fixed seed and stepping clock, so ids and timestamps are reproducible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicConfig {
    pub seed: u64,
    pub clock_start: DateTime<Utc>,
    #[serde(default = "default_step")]
    pub clock_step_ms: i64,
}

fn default_step() -> i64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: String,
    pub data_dir: Option<PathBuf>,
    pub k_default: usize,
    pub token_budget: usize,
    pub sla_window_hours: i64,
    /// Seconds between scheduler passes of a running server; 0 disables.
    pub scheduler_interval_secs: u64,
    pub embedding_dimension: usize,
    pub chunk_window: usize,
    pub chunk_overlap: usize,
    pub validated_floor: f64,
    pub accuracy_min_rating: u8,
    pub tokens: Vec<TokenEntry>,
    pub name_dictionary: Option<PathBuf>,
    pub signing_key: String,
    pub deterministic: Option<DeterministicConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: None,
            k_default: DEFAULT_K,
            token_budget: DEFAULT_TOKEN_BUDGET,
            sla_window_hours: DEFAULT_SLA_HOURS,
            scheduler_interval_secs: 60,
            embedding_dimension: DEFAULT_DIMENSION,
            chunk_window: DEFAULT_WINDOW,
            chunk_overlap: DEFAULT_OVERLAP,
            validated_floor: DEFAULT_VALIDATED_FLOOR,
            accuracy_min_rating: 4,
            tokens: Vec::new(),
            name_dictionary: None,
            signing_key: "expert-mind-local".into(),
            deterministic: None,
        }
    }
}

impl Config {
    /// Reads a JSON config. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        let mut config: Config = serde_json::from_str(&text)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.data_dir.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.name_dictionary.as_mut() {
            resolve(p);
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.k_default, 8);
        assert_eq!(c.token_budget, 2048);
        assert_eq!(c.sla_window_hours, 72);
        assert_eq!(c.embedding_dimension, 64);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"k": 3}"#).is_err());
    }
}
