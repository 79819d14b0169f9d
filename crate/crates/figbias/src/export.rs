//! Per-fold, per-mode train/dev/test JSONL trees for external trainers.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.json
//! fold_0/default/train.jsonl
//! fold_0/default/dev.jsonl
//! fold_0/default/test.jsonl
//! fold_0/only_pme/...
//! ```
//!
//! Every file exists even when its partition is empty. Rows are
//! `AblatedExample` objects in the plan's id order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use figbias_core::ablation::{ablate, AblatedExample, AblationError, Mode, RESERVED};
use figbias_core::corpus::{Dataset, Partition, SplitKey};
use figbias_core::report::REPORT_SCHEMA_VERSION;
use figbias_core::split::{Scheme, SplitPlan};
use serde::{Deserialize, Serialize};

use crate::io::{write_json, write_jsonl, IoError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub fold: usize,
    pub mode: Mode,
    pub partition: Partition,
    /// Relative to the export directory, with `/` separators.
    pub path: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Version of the report schema consumers must emit.
    pub schema_version: u32,
    pub dataset: String,
    pub scheme: Scheme,
    pub key: Option<SplitKey>,
    pub seed: u64,
    pub folds: usize,
    pub modes: Vec<Mode>,
    /// Markers that consumers should register as special tokens.
    pub reserved_tokens: Vec<String>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Ablation(#[from] AblationError),
    #[error("plan refers to unknown instance {0:?}")]
    UnknownId(String),
}

pub fn export(
    dataset: &Dataset,
    plan: &SplitPlan,
    modes: &[Mode],
    dir: &Path,
) -> Result<Manifest, ExportError> {
    let index: BTreeMap<&str, usize> = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();
    let mut files = Vec::new();
    for &mode in modes {
        let rendered: Vec<AblatedExample> = dataset
            .instances
            .iter()
            .map(|i| ablate(i, mode))
            .collect::<Result<_, _>>()?;
        for fold in 0..plan.folds() {
            for partition in Partition::ALL {
                let rows = plan
                    .ids(fold, partition)
                    .map(|id| {
                        index
                            .get(id)
                            .map(|&i| &rendered[i])
                            .ok_or_else(|| ExportError::UnknownId(id.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let rel = format!("fold_{fold}/{mode}/{partition}.jsonl");
                let path: PathBuf = dir.join(&rel);
                write_jsonl(&path, rows.iter().copied())?;
                files.push(FileEntry {
                    fold,
                    mode,
                    partition,
                    path: rel,
                    rows: rows.len(),
                });
            }
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: dataset.name.clone(),
        scheme: plan.scheme,
        key: plan.key,
        seed: plan.seed,
        folds: plan.folds(),
        modes: modes.to_vec(),
        reserved_tokens: RESERVED.iter().map(|s| s.to_string()).collect(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
