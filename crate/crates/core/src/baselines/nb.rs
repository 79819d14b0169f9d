//! Multinomial naive Bayes over whitespace tokens of ablated text.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ablation::AblatedExample;
use crate::corpus::Label;
use crate::num::{exp, ln};

use super::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbConfig {
    /// Laplace smoothing.
    pub alpha: f64,
    pub bigrams: bool,
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig {
            alpha: 1.0,
            bigrams: false,
        }
    }
}

/// Tried in order on dev data; a later value must be strictly better.
pub const ALPHA_GRID: [f64; 3] = [1.0, 0.5, 0.1];

fn class_index(label: Label) -> usize {
    match label {
        Label::Metaphoric => 0,
        Label::Literal => 1,
    }
}

/// Lowercased unigrams, plus space-joined bigrams when enabled.
pub fn features(text: &str, bigrams: bool) -> Vec<String> {
    let unigrams: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let mut out = unigrams.clone();
    if bigrams {
        out.extend(unigrams.windows(2).map(|w| alloc::format!("{} {}", w[0], w[1])));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub config: NbConfig,
    pub vocabulary: BTreeMap<String, usize>,
    /// Indexed metaphoric, literal.
    pub log_prior: [f64; 2],
    pub log_likelihood: [Vec<f64>; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbPrediction {
    pub label: Label,
    /// Unnormalized log posteriors, metaphoric then literal.
    pub scores: [f64; 2],
}

pub fn train_nb<'a>(
    train: impl IntoIterator<Item = &'a AblatedExample>,
    config: NbConfig,
) -> Result<NaiveBayesModel, TrainError> {
    let mut vocabulary: BTreeMap<String, usize> = BTreeMap::new();
    let mut doc_counts = [0u64; 2];
    let mut token_counts: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
    for ex in train {
        let c = class_index(ex.label);
        doc_counts[c] += 1;
        for f in features(&ex.text, config.bigrams) {
            let next = vocabulary.len();
            let idx = *vocabulary.entry(f).or_insert(next);
            if idx == token_counts[0].len() {
                token_counts[0].push(0);
                token_counts[1].push(0);
            }
            token_counts[c][idx] += 1;
        }
    }
    match doc_counts {
        [0, 0] => return Err(TrainError::Empty),
        [_, 0] => return Err(TrainError::SingleLabel(Label::Metaphoric)),
        [0, _] => return Err(TrainError::SingleLabel(Label::Literal)),
        _ => {}
    }

    let docs = (doc_counts[0] + doc_counts[1]) as f64;
    let log_prior = [
        ln(doc_counts[0] as f64 / docs),
        ln(doc_counts[1] as f64 / docs),
    ];
    let v = vocabulary.len() as f64;
    let log_likelihood = [0, 1].map(|c| {
        let total: u64 = token_counts[c].iter().sum();
        let denom = total as f64 + config.alpha * v;
        token_counts[c]
            .iter()
            .map(|&n| ln((n as f64 + config.alpha) / denom))
            .collect::<Vec<f64>>()
    });
    Ok(NaiveBayesModel {
        config,
        vocabulary,
        log_prior,
        log_likelihood,
    })
}

impl NaiveBayesModel {
    /// Highest log-prior plus summed token log-likelihoods wins; unknown
    /// tokens are ignored and ties go to metaphoric.
    pub fn predict(&self, text: &str) -> NbPrediction {
        let mut scores = self.log_prior;
        for f in features(text, self.config.bigrams) {
            if let Some(&idx) = self.vocabulary.get(&f) {
                scores[0] += self.log_likelihood[0][idx];
                scores[1] += self.log_likelihood[1][idx];
            }
        }
        NbPrediction {
            label: decide(scores),
            scores,
        }
    }

    /// Posterior probabilities, metaphoric then literal.
    pub fn posterior(&self, text: &str) -> [f64; 2] {
        let [m, l] = self.predict(text).scores;
        let top = if m > l { m } else { l };
        let (em, el) = (exp(m - top), exp(l - top));
        [em / (em + el), el / (em + el)]
    }
}

pub fn decide(scores: [f64; 2]) -> Label {
    if scores[0] >= scores[1] {
        Label::Metaphoric
    } else {
        Label::Literal
    }
}

/// Picks the smoothing value with the best dev macro-F1 from `grid`.
pub fn select_alpha<'a>(
    train: &[&'a AblatedExample],
    dev: &[&'a AblatedExample],
    grid: &[f64],
    bigrams: bool,
) -> Result<NaiveBayesModel, TrainError> {
    let default = NbConfig {
        alpha: grid.first().copied().unwrap_or(1.0),
        bigrams,
    };
    let mut best = train_nb(train.iter().copied(), default)?;
    if dev.is_empty() {
        return Ok(best);
    }
    let score = |m: &NaiveBayesModel| {
        let counts = crate::metrics::ConfusionCounts::from_pairs(
            dev.iter().map(|e| (e.label, m.predict(&e.text).label)),
        );
        crate::metrics::metrics(&counts)
            .map(|b| b.macro_f1)
            .unwrap_or(0.0)
    };
    let mut best_score = score(&best);
    for &alpha in grid.iter().skip(1) {
        let model = train_nb(train.iter().copied(), NbConfig { alpha, bigrams })?;
        let s = score(&model);
        if s > best_score {
            best = model;
            best_score = s;
        }
    }
    Ok(best)
}
