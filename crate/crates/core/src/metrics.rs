//! Binary classification metrics with metaphoric as the positive class.
//!
//! All rates are percentages kept at full precision; rounding to one decimal
//! happens only when a report is rendered.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (gold, pred) in pairs {
            c.add(gold, pred);
        }
        c
    }

    pub fn add(&mut self, gold: Label, pred: Label) {
        match (gold, pred) {
            (Label::Metaphoric, Label::Metaphoric) => self.tp += 1,
            (Label::Literal, Label::Metaphoric) => self.fp += 1,
            (Label::Metaphoric, Label::Literal) => self.fn_ += 1,
            (Label::Literal, Label::Literal) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with literal as the positive class.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no examples were evaluated")]
pub struct EmptyEvaluation;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub accuracy: f64,
    pub metaphoric: ClassScores,
    pub literal: ClassScores,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn class_scores(tp: u64, fp: u64, fn_: u64) -> ClassScores {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores {
        precision,
        recall,
        f1,
    }
}

/// Computes accuracy, per-class precision/recall/F1 and macro-F1. Any
/// zero-denominator rate is 0.
pub fn metrics(counts: &ConfusionCounts) -> Result<MetricBundle, EmptyEvaluation> {
    let total = counts.total();
    if total == 0 {
        return Err(EmptyEvaluation);
    }
    let metaphoric = class_scores(counts.tp, counts.fp, counts.fn_);
    let literal = class_scores(counts.tn, counts.fn_, counts.fp);
    Ok(MetricBundle {
        accuracy: ratio(counts.tp + counts.tn, total),
        metaphoric,
        literal,
        macro_f1: (metaphoric.f1 + literal.f1) / 2.0,
    })
}

/// Signed percentage change of `baseline` relative to `default`. `None` when
/// `default` is not positive.
pub fn relative_gap(default: f64, baseline: f64) -> Option<f64> {
    if default > 0.0 {
        Some(100.0 * (baseline - default) / default)
    } else {
        None
    }
}

/// Accuracy of predicting `label` for every example.
pub fn constant_accuracy(gold: impl IntoIterator<Item = Label>, label: Label) -> Option<f64> {
    let (mut hit, mut total) = (0u64, 0u64);
    for g in gold {
        total += 1;
        hit += u64::from(g == label);
    }
    (total > 0).then(|| ratio(hit, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::round1;
    use Label::{Literal as L, Metaphoric as M};

    #[test]
    fn hand_computed_confusion() {
        // tp=2 fp=0 fn=1 tn=3. P_M = 100, R_M = 200/3, F1_M = 80.
        // P_L = 75, R_L = 100, F1_L = 600/7 = 85.714..., macro = 82.857...
        let gold = [M, M, M, L, L, L];
        let pred = [M, M, L, L, L, L];
        let c = ConfusionCounts::from_pairs(gold.into_iter().zip(pred));
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 0, fn_: 1, tn: 3 });
        let m = metrics(&c).unwrap();
        assert_eq!(round1(m.metaphoric.precision), 100.0);
        assert_eq!(round1(m.metaphoric.recall), 66.7);
        assert_eq!(round1(m.metaphoric.f1), 80.0);
        assert_eq!(round1(m.literal.f1), 85.7);
        assert_eq!(round1(m.macro_f1), 82.9);
        assert!((m.macro_f1 - (80.0 + 600.0 / 7.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_predictions() {
        let c = ConfusionCounts { tp: 4, fp: 0, fn_: 0, tn: 7 };
        assert_eq!(metrics(&c).unwrap().macro_f1, 100.0);
    }

    #[test]
    fn all_metaphoric_predictor_on_a_third_metaphoric_data() {
        let c = ConfusionCounts { tp: 1, fp: 2, fn_: 0, tn: 0 };
        let m = metrics(&c).unwrap();
        assert_eq!(round1(m.accuracy), 33.3);
        assert_eq!(m.metaphoric.recall, 100.0);
        assert_eq!(m.literal.precision, 0.0);
        assert_eq!(m.literal.f1, 0.0);
    }

    #[test]
    fn empty_counts_are_an_error() {
        assert_eq!(metrics(&ConfusionCounts::default()), Err(EmptyEvaluation));
    }

    #[test]
    fn gaps_from_published_scores() {
        assert_eq!(round1(relative_gap(75.78, 56.67).unwrap()), -25.2);
        assert_eq!(round1(relative_gap(87.36, 80.88).unwrap()), -7.4);
        assert_eq!(round1(relative_gap(88.81, 91.14).unwrap()), 2.6);
        assert_eq!(relative_gap(50.0, 50.0), Some(0.0));
        assert_eq!(relative_gap(0.0, 50.0), None);
    }

    #[test]
    fn constant_classifier_accuracy() {
        assert_eq!(constant_accuracy([M, L, L], L), Some(200.0 / 3.0));
        assert_eq!(constant_accuracy([], L), None);
    }
}
