//! End-to-end audit configuration, read from TOML or JSON.
//!
//! Option values stay as strings until the stage that consumes them parses
//! them, so a bad value is reported against that stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    /// Defaults to the dataset tag of the ingested instances.
    #[serde(default)]
    pub name: Option<String>,
    pub path: PathBuf,
    /// Preset name or spec path; canonical JSONL when unset.
    #[serde(default)]
    pub adapter: Option<String>,
    /// Overrides the global split key for this dataset.
    #[serde(default)]
    pub key: Option<String>,
    #[serde(default)]
    pub binarize_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Any of original, random, lexical.
    #[serde(default)]
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub key: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub modes: Option<Vec<String>>,
    #[serde(default)]
    pub classifiers: Option<Vec<String>>,
    /// Expected test size above which a single fold is used; 0 disables.
    #[serde(default)]
    pub single_fold_threshold: Option<usize>,
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    /// exact_instance, context_and_span or none.
    #[serde(default)]
    pub dedup: Option<String>,
    /// Also write export trees for external trainers.
    #[serde(default)]
    pub export: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
    #[error("{0}: no datasets configured")]
    Empty(PathBuf),
}

impl AuditConfig {
    /// JSON when the extension is `.json`, TOML otherwise. Relative dataset
    /// and output paths are resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut cfg: AuditConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))?
        };
        if cfg.datasets.is_empty() {
            return Err(ConfigError::Empty(path.to_path_buf()));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        for d in &mut cfg.datasets {
            d.path = resolve(&d.path);
            if let Some(a) = &d.adapter {
                if a.ends_with(".toml") {
                    d.adapter = Some(resolve(Path::new(a)).to_string_lossy().into_owned());
                }
            }
        }
        cfg.out_dir = cfg.out_dir.as_deref().map(resolve);
        Ok(cfg)
    }
}
