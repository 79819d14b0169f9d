//! Partial-input renderings of an instance.
//!
//! `Default` shows the whole sentence with the expression wrapped in
//! [`PME_OPEN`]/[`PME_CLOSE`]. `OnlyPme` shows only the expression. `Masked`
//! replaces each expression token with [`MASK`]. Tokens are joined with
//! single spaces; punctuation is never reattached.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, Label};

pub const PME_OPEN: &str = "<PME>";
pub const PME_CLOSE: &str = "</PME>";
pub const MASK: &str = "<masked>";

/// Reserved marker strings; no input token may contain one of them.
pub const RESERVED: [&str; 3] = [PME_OPEN, PME_CLOSE, MASK];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Default,
    OnlyPme,
    Masked,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Default, Mode::OnlyPme, Mode::Masked];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Default => "default",
            Mode::OnlyPme => "only_pme",
            Mode::Masked => "masked",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = AblationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| AblationError::UnknownMode(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AblationError {
    #[error("instance {id}: token {index} contains the reserved marker {marker}")]
    MarkerCollision {
        id: String,
        index: usize,
        marker: &'static str,
    },
    #[error("instance {0} has no valid span")]
    NoSpan(String),
    #[error("unknown mode {0:?} (expected default, only_pme or masked)")]
    UnknownMode(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblatedExample {
    pub instance_id: String,
    pub mode: Mode,
    pub text: String,
    pub label: Label,
}

/// Renders `instance` under `mode`.
///
/// Multi-span instances are wrapped (default) and extracted (only_pme) over
/// their merged range, while masking replaces only the tokens inside the
/// spans so that words between the parts of the expression survive.
pub fn ablate(instance: &Instance, mode: Mode) -> Result<AblatedExample, AblationError> {
    for (index, tok) in instance.tokens.iter().enumerate() {
        if let Some(marker) = RESERVED.iter().find(|m| tok.contains(*m)) {
            return Err(AblationError::MarkerCollision {
                id: instance.id.clone(),
                index,
                marker,
            });
        }
    }
    let merged = instance
        .merged_span()
        .filter(|m| m.start < m.end && m.end <= instance.tokens.len())
        .ok_or_else(|| AblationError::NoSpan(instance.id.clone()))?;
    let toks = &instance.tokens;

    let text = match mode {
        Mode::Default => {
            let mut parts: Vec<&str> = Vec::with_capacity(toks.len());
            parts.extend(toks[..merged.start].iter().map(String::as_str));
            let inner = toks[merged.start..merged.end].join(" ");
            let wrapped = alloc::format!("{PME_OPEN}{inner}{PME_CLOSE}");
            let mut text = parts.join(" ");
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&wrapped);
            for t in &toks[merged.end..] {
                text.push(' ');
                text.push_str(t);
            }
            text
        }
        Mode::OnlyPme => toks[merged.start..merged.end].join(" "),
        Mode::Masked => toks
            .iter()
            .enumerate()
            .map(|(i, t)| if instance.in_span(i) { MASK } else { t.as_str() })
            .collect::<Vec<_>>()
            .join(" "),
    };

    Ok(AblatedExample {
        instance_id: instance.id.clone(),
        mode,
        text,
        label: instance.label,
    })
}

/// Ablates every instance, stopping at the first error.
pub fn ablate_all<'a>(
    instances: impl IntoIterator<Item = &'a Instance>,
    mode: Mode,
) -> Result<Vec<AblatedExample>, AblationError> {
    instances.into_iter().map(|i| ablate(i, mode)).collect()
}
