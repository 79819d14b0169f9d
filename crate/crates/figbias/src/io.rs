//! JSONL and JSON reading and writing.
//!
//! Every writer creates missing parent directories and ends files with a
//! newline, so reruns with the same inputs produce byte-identical output.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use figbias_core::corpus::{Dataset, Instance};
use figbias_core::report::{ReportFile, REPORT_SCHEMA_VERSION};
use figbias_core::sampler::TokenCorpus;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        /// 1-based; 0 for whole-file documents.
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported report schema_version {found} (expected {REPORT_SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// One value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), IoError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}

/// Pretty-printed with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Canonical JSONL. The dataset name is taken from the first instance, or
/// the file stem when the file is empty.
pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let instances: Vec<Instance> = read_jsonl(path)?;
    let name = instances
        .first()
        .map(|i| i.dataset.clone())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let mut ds = Dataset::new(name, instances);
    ds.provenance = format!("canonical JSONL {}", path.display());
    Ok(ds)
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), IoError> {
    write_jsonl(path, &dataset.instances)
}

pub fn read_corpus(path: &Path) -> Result<TokenCorpus, IoError> {
    Ok(TokenCorpus {
        sentences: read_jsonl(path)?,
    })
}

/// Rejects files written under another schema version.
pub fn read_report(path: &Path) -> Result<ReportFile, IoError> {
    let file: ReportFile = read_json(path)?;
    if file.schema_version != REPORT_SCHEMA_VERSION {
        return Err(IoError::Schema {
            path: path.to_path_buf(),
            found: file.schema_version,
        });
    }
    Ok(file)
}
