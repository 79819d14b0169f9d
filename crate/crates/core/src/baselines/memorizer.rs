//! Per-expression lookup table: the purest form of lexical memorization.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ablation::{AblatedExample, Mode, MASK, PME_CLOSE, PME_OPEN};
use crate::corpus::{split_key_of, Instance, Label, SplitKey};

use super::TrainError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub metaphoric: u64,
    pub literal: u64,
}

impl LabelCounts {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::Metaphoric => self.metaphoric += 1,
            Label::Literal => self.literal += 1,
        }
    }

    /// Strict majority; `None` on a tie.
    pub fn majority(&self) -> Option<Label> {
        match self.metaphoric.cmp(&self.literal) {
            core::cmp::Ordering::Greater => Some(Label::Metaphoric),
            core::cmp::Ordering::Less => Some(Label::Literal),
            core::cmp::Ordering::Equal => None,
        }
    }
}

/// What the memorizer looks up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "key")]
pub enum KeyView {
    /// Split key of a canonical instance.
    Instance(SplitKey),
    /// The expression as visible in ablated text: the marked span in default
    /// mode, the whole text in only-PME mode, the mask run in masked mode.
    Ablated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorizerModel {
    pub view: KeyView,
    pub table: BTreeMap<String, LabelCounts>,
    pub global: LabelCounts,
}

impl MemorizerModel {
    pub fn fit(
        view: KeyView,
        pairs: impl IntoIterator<Item = (String, Label)>,
    ) -> Result<Self, TrainError> {
        let mut table: BTreeMap<String, LabelCounts> = BTreeMap::new();
        let mut global = LabelCounts::default();
        for (key, label) in pairs {
            table.entry(key).or_default().add(label);
            global.add(label);
        }
        if global.metaphoric + global.literal == 0 {
            return Err(TrainError::Empty);
        }
        Ok(MemorizerModel {
            view,
            table,
            global,
        })
    }

    /// Prediction for a key: its own majority when seen and not tied,
    /// otherwise the global majority, otherwise metaphoric.
    pub fn predict_key(&self, key: &str) -> Label {
        self.table
            .get(key)
            .and_then(LabelCounts::majority)
            .or_else(|| self.global.majority())
            .unwrap_or(Label::Metaphoric)
    }

    pub fn global_label(&self) -> Label {
        self.global.majority().unwrap_or(Label::Metaphoric)
    }

    pub fn predict(&self, instance: &Instance) -> Label {
        match self.view {
            KeyView::Instance(key) => match split_key_of(instance, key) {
                Ok(k) => self.predict_key(&k),
                Err(_) => self.global_label(),
            },
            KeyView::Ablated => self.global_label(),
        }
    }

    pub fn predict_ablated(&self, example: &AblatedExample) -> Label {
        self.predict_key(&ablated_key(example))
    }
}

/// Trains on instance split keys. Instances that cannot be keyed under `key`
/// make the whole model fall back to surface keys.
pub fn train_memorizer<'a>(
    train: impl IntoIterator<Item = &'a Instance>,
    key: SplitKey,
) -> Result<MemorizerModel, TrainError> {
    let train: Vec<&Instance> = train.into_iter().collect();
    let usable = train.iter().all(|i| split_key_of(i, key).is_ok());
    let key = if usable { key } else { SplitKey::Surface };
    MemorizerModel::fit(
        KeyView::Instance(key),
        train.iter().filter_map(|i| split_key_of(i, key).ok().map(|k| (k, i.label))),
    )
}

pub fn train_memorizer_ablated<'a>(
    train: impl IntoIterator<Item = &'a AblatedExample>,
) -> Result<MemorizerModel, TrainError> {
    MemorizerModel::fit(
        KeyView::Ablated,
        train.into_iter().map(|e| (ablated_key(e), e.label)),
    )
}

/// The expression visible in an ablated example, lowercased.
pub fn ablated_key(example: &AblatedExample) -> String {
    let text = example.text.as_str();
    match example.mode {
        Mode::OnlyPme => text.to_lowercase(),
        Mode::Default => text
            .find(PME_OPEN)
            .and_then(|s| {
                let rest = &text[s + PME_OPEN.len()..];
                rest.find(PME_CLOSE).map(|e| rest[..e].to_lowercase())
            })
            .unwrap_or_default(),
        Mode::Masked => text
            .split_whitespace()
            .filter(|t| *t == MASK)
            .collect::<Vec<_>>()
            .join(" "),
    }
}
