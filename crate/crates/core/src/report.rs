//! Audit results: per-fold cells, fold averages and relative gaps.
//!
//! Gaps are computed on fold-averaged scores, not averaged per fold.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ablation::Mode;
use crate::corpus::SplitKey;
use crate::metrics::{relative_gap, ClassScores, ConfusionCounts, MetricBundle};
use crate::split::Scheme;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub fold: usize,
    pub mode: Mode,
    pub classifier: String,
    pub counts: ConfusionCounts,
    pub metrics: MetricBundle,
    /// Accuracy of the train-majority label on this fold's test partition.
    pub majority_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub mode: Mode,
    pub classifier: String,
    pub folds: usize,
    pub metrics: MetricBundle,
    pub majority_accuracy: f64,
}

/// Relative macro-F1 change of a mode against the default mode of the same
/// classifier. `None` when the default score is zero or missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub mode: Mode,
    pub classifier: String,
    pub macro_f1_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub scheme: Scheme,
    #[serde(default)]
    pub key: Option<SplitKey>,
    pub folds: usize,
    pub seed: u64,
    pub cells: Vec<Cell>,
    pub averaged: Vec<AveragedRow>,
    pub gaps: Vec<Gap>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// On-disk report: a versioned list of per-dataset reports. Files from
/// several runs (or external trainers) merge by concatenating `reports`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub reports: Vec<EvalReport>,
}

impl ReportFile {
    pub fn new(reports: Vec<EvalReport>) -> Self {
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            reports,
        }
    }

    pub fn merge(&mut self, other: ReportFile) {
        self.reports.extend(other.reports);
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean_scores(scores: &[ClassScores]) -> ClassScores {
    ClassScores {
        precision: mean(scores.iter().map(|s| s.precision)),
        recall: mean(scores.iter().map(|s| s.recall)),
        f1: mean(scores.iter().map(|s| s.f1)),
    }
}

/// Field-wise mean of metric bundles.
pub fn average_bundles(bundles: &[MetricBundle]) -> MetricBundle {
    let met: Vec<ClassScores> = bundles.iter().map(|b| b.metaphoric).collect();
    let lit: Vec<ClassScores> = bundles.iter().map(|b| b.literal).collect();
    MetricBundle {
        accuracy: mean(bundles.iter().map(|b| b.accuracy)),
        metaphoric: mean_scores(&met),
        literal: mean_scores(&lit),
        macro_f1: mean(bundles.iter().map(|b| b.macro_f1)),
    }
}

/// Averages cells per (classifier, mode), keeping the first-seen order of
/// classifiers and modes.
pub fn average_cells(cells: &[Cell]) -> Vec<AveragedRow> {
    let mut order: Vec<(String, Mode)> = Vec::new();
    let mut grouped: BTreeMap<(String, Mode), Vec<&Cell>> = BTreeMap::new();
    for c in cells {
        let key = (c.classifier.clone(), c.mode);
        if !grouped.contains_key(&key) {
            order.push(key.clone());
        }
        grouped.entry(key).or_default().push(c);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &grouped[&key];
            let bundles: Vec<MetricBundle> = group.iter().map(|c| c.metrics).collect();
            AveragedRow {
                mode: key.1,
                classifier: key.0,
                folds: group.len(),
                metrics: average_bundles(&bundles),
                majority_accuracy: mean(group.iter().map(|c| c.majority_accuracy)),
            }
        })
        .collect()
}

pub fn gaps(rows: &[AveragedRow]) -> Vec<Gap> {
    rows.iter()
        .map(|r| {
            let default = rows
                .iter()
                .find(|d| d.classifier == r.classifier && d.mode == Mode::Default);
            Gap {
                mode: r.mode,
                classifier: r.classifier.clone(),
                macro_f1_gap: default
                    .and_then(|d| relative_gap(d.metrics.macro_f1, r.metrics.macro_f1)),
            }
        })
        .collect()
}

impl EvalReport {
    pub fn averaged_row(&self, classifier: &str, mode: Mode) -> Option<&AveragedRow> {
        self.averaged
            .iter()
            .find(|r| r.classifier == classifier && r.mode == mode)
    }

    pub fn gap(&self, classifier: &str, mode: Mode) -> Option<f64> {
        self.gaps
            .iter()
            .find(|g| g.classifier == classifier && g.mode == mode)
            .and_then(|g| g.macro_f1_gap)
    }

    /// Classifier names in first-seen order.
    pub fn classifiers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.averaged {
            if !out.contains(&r.classifier.as_str()) {
                out.push(&r.classifier);
            }
        }
        out
    }
}
