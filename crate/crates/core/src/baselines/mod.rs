//! Incomplete-information classifiers and the audit that runs them on every
//! fold and input mode.
//!
//! * `majority` predicts the most frequent training label.
//! * `memorizer` looks the visible expression up in a table built from
//!   training data.
//! * `nb` is multinomial naive Bayes over the ablated text.
//!
//! All ties break toward metaphoric.

mod majority;
mod memorizer;
mod nb;

pub use majority::train_majority;
pub use memorizer::{
    ablated_key, train_memorizer, train_memorizer_ablated, KeyView, LabelCounts, MemorizerModel,
};
pub use nb::{decide, features, select_alpha, train_nb, NaiveBayesModel, NbConfig, NbPrediction, ALPHA_GRID};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ablation::{ablate, AblatedExample, AblationError, Mode};
use crate::corpus::{Dataset, Label, Partition};
use crate::metrics::{constant_accuracy, metrics, ConfusionCounts};
use crate::report::{average_cells, gaps, Cell, EvalReport};
use crate::split::{verify, PlanViolation, SplitPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("training set only contains {0} examples")]
    SingleLabel(Label),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Majority,
    Memorizer,
    #[serde(rename = "nb")]
    NaiveBayes,
}

impl Classifier {
    pub const ALL: [Classifier; 3] = [Classifier::Majority, Classifier::Memorizer, Classifier::NaiveBayes];

    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::Majority => "majority",
            Classifier::Memorizer => "memorizer",
            Classifier::NaiveBayes => "nb",
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown classifier {0:?} (expected majority, memorizer or nb)")]
pub struct UnknownClassifier(pub String);

impl FromStr for Classifier {
    type Err = UnknownClassifier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Classifier::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownClassifier(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditOptions {
    pub modes: Vec<Mode>,
    pub classifiers: Vec<Classifier>,
    pub nb: NbConfig,
    /// When set, naive Bayes picks its smoothing from this grid on dev data.
    pub alpha_grid: Option<Vec<f64>>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            modes: Mode::ALL.to_vec(),
            classifiers: Classifier::ALL.to_vec(),
            nb: NbConfig::default(),
            alpha_grid: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("plan does not fit the dataset: {0}")]
    InvalidPlan(String),
    #[error("fold {fold} has an empty test partition")]
    EmptyTest { fold: usize },
    #[error("ablation failed: {0}")]
    Ablation(#[from] AblationError),
    #[error("fold {fold}, mode {mode}, classifier {classifier}: {source}")]
    Training {
        fold: usize,
        mode: Mode,
        classifier: Classifier,
        source: TrainError,
    },
}

/// Trains every requested classifier on every fold and mode of `plan`, and
/// scores it on the fold's test partition.
pub fn run_audit(
    dataset: &Dataset,
    plan: &SplitPlan,
    opts: &AuditOptions,
) -> Result<EvalReport, AuditError> {
    let structural = verify(plan, dataset).violations.into_iter().find(|v| {
        !matches!(
            v,
            PlanViolation::SizeOutOfTolerance { .. } | PlanViolation::NeverTested { .. }
        )
    });
    if let Some(v) = structural {
        return Err(AuditError::InvalidPlan(v.to_string()));
    }

    let index: BTreeMap<&str, usize> = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();

    let mut rendered: BTreeMap<Mode, Vec<AblatedExample>> = BTreeMap::new();
    for &mode in &opts.modes {
        if let alloc::collections::btree_map::Entry::Vacant(slot) = rendered.entry(mode) {
            slot.insert(
                dataset
                    .instances
                    .iter()
                    .map(|i| ablate(i, mode))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
    }

    let mut cells = Vec::new();
    for fold in 0..plan.folds() {
        let mut parts: [Vec<usize>; 3] = [vec![], vec![], vec![]];
        for (id, p) in &plan.assignment[fold] {
            let slot = match p {
                Partition::Train => 0,
                Partition::Dev => 1,
                Partition::Test => 2,
            };
            parts[slot].push(index[id.as_str()]);
        }
        let [train, dev, test] = parts;
        if test.is_empty() {
            return Err(AuditError::EmptyTest { fold });
        }
        let gold: Vec<Label> = test.iter().map(|&i| dataset.instances[i].label).collect();
        let majority = train_majority(train.iter().map(|&i| dataset.instances[i].label))
            .map_err(|source| AuditError::Training {
                fold,
                mode: opts.modes.first().copied().unwrap_or(Mode::Default),
                classifier: Classifier::Majority,
                source,
            })?;
        let majority_accuracy = constant_accuracy(gold.iter().copied(), majority).unwrap_or(0.0);

        for &mode in &opts.modes {
            let examples = &rendered[&mode];
            let pick = |ids: &[usize]| ids.iter().map(|&i| &examples[i]).collect::<Vec<_>>();
            let (train_ex, dev_ex, test_ex) = (pick(&train), pick(&dev), pick(&test));
            for &classifier in &opts.classifiers {
                let wrap = |source| AuditError::Training {
                    fold,
                    mode,
                    classifier,
                    source,
                };
                let (preds, alpha): (Vec<Label>, Option<f64>) = match classifier {
                    Classifier::Majority => (vec![majority; test_ex.len()], None),
                    Classifier::Memorizer => {
                        let model = train_memorizer_ablated(train_ex.iter().copied()).map_err(wrap)?;
                        (test_ex.iter().map(|e| model.predict_ablated(e)).collect(), None)
                    }
                    Classifier::NaiveBayes => {
                        let model = match &opts.alpha_grid {
                            Some(grid) => select_alpha(&train_ex, &dev_ex, grid, opts.nb.bigrams),
                            None => train_nb(train_ex.iter().copied(), opts.nb),
                        }
                        .map_err(wrap)?;
                        (
                            test_ex.iter().map(|e| model.predict(&e.text).label).collect(),
                            Some(model.config.alpha),
                        )
                    }
                };
                let counts = ConfusionCounts::from_pairs(gold.iter().copied().zip(preds));
                let bundle = metrics(&counts).map_err(|_| AuditError::EmptyTest { fold })?;
                cells.push(Cell {
                    fold,
                    mode,
                    classifier: classifier.as_str().to_string(),
                    counts,
                    metrics: bundle,
                    majority_accuracy,
                    alpha,
                });
            }
        }
    }

    let averaged = average_cells(&cells);
    let gaps = gaps(&averaged);
    Ok(EvalReport {
        dataset: dataset.name.clone(),
        scheme: plan.scheme,
        key: plan.key,
        folds: plan.folds(),
        seed: plan.seed,
        cells,
        averaged,
        gaps,
        warnings: plan.warnings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Span};
    use crate::split::{plan_random, PlanOptions};
    use alloc::format;

    fn fixture(n_keys: usize, per_key: usize) -> Dataset {
        let mut instances = Vec::new();
        for k in 0..n_keys {
            for j in 0..per_key {
                let label = if k % 2 == 0 { Label::Metaphoric } else { Label::Literal };
                instances.push(Instance::new(
                    format!("k{k:02}-{j:02}"),
                    "fx",
                    vec![
                        format!("ctx{}", (k * 7 + j * 3) % 11),
                        format!("expr{k}"),
                        format!("ctx{}", (k + j) % 5),
                    ],
                    vec![Span::new(1, 2)],
                    label,
                ));
            }
        }
        Dataset::new("fx", instances)
    }

    #[test]
    fn cell_and_row_counts() {
        let ds = fixture(10, 5);
        let plan = plan_random(&ds, &PlanOptions::default()).unwrap();
        let opts = AuditOptions {
            classifiers: vec![Classifier::Memorizer, Classifier::NaiveBayes],
            ..AuditOptions::default()
        };
        let report = run_audit(&ds, &plan, &opts).unwrap();
        assert_eq!(report.cells.len(), 30);
        assert_eq!(report.averaged.len(), 6);
        assert_eq!(report.gaps.len(), 6);
        for c in ["memorizer", "nb"] {
            assert_eq!(report.gap(c, Mode::Default), Some(0.0));
        }
    }

    #[test]
    fn gaps_are_computed_from_averaged_scores() {
        let ds = fixture(10, 5);
        let plan = plan_random(&ds, &PlanOptions::default()).unwrap();
        let report = run_audit(&ds, &plan, &AuditOptions::default()).unwrap();
        let d = report.averaged_row("nb", Mode::Default).unwrap().metrics.macro_f1;
        let m = report.averaged_row("nb", Mode::Masked).unwrap().metrics.macro_f1;
        assert_eq!(report.gap("nb", Mode::Masked), crate::metrics::relative_gap(d, m));
    }

    #[test]
    fn masked_memorizer_collapses_to_majority() {
        let ds = fixture(10, 5);
        let plan = plan_random(&ds, &PlanOptions::default()).unwrap();
        let report = run_audit(&ds, &plan, &AuditOptions::default()).unwrap();
        for c in report.cells.iter().filter(|c| c.mode == Mode::Masked && c.classifier == "memorizer") {
            assert_eq!(c.metrics.accuracy, c.majority_accuracy);
        }
        let pme = report.averaged_row("memorizer", Mode::OnlyPme).unwrap();
        assert_eq!(pme.metrics.macro_f1, 100.0);
    }

    #[test]
    fn single_label_fold_is_reported_with_context() {
        let mut ds = fixture(4, 5);
        for i in &mut ds.instances {
            i.label = Label::Literal;
        }
        let plan = plan_random(&ds, &PlanOptions::default()).unwrap();
        let err = run_audit(&ds, &plan, &AuditOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            AuditError::Training {
                fold: 0,
                classifier: Classifier::NaiveBayes,
                source: TrainError::SingleLabel(Label::Literal),
                ..
            }
        ));
    }

    #[test]
    fn foreign_plan_is_rejected() {
        let ds = fixture(4, 5);
        let other = fixture(5, 5);
        let plan = plan_random(&other, &PlanOptions::default()).unwrap();
        assert!(matches!(
            run_audit(&ds, &plan, &AuditOptions::default()),
            Err(AuditError::InvalidPlan(_))
        ));
    }

    #[test]
    fn classifier_names() {
        for c in Classifier::ALL {
            assert_eq!(c.as_str().parse::<Classifier>().unwrap(), c);
        }
        assert!("bert".parse::<Classifier>().is_err());
    }
}
