//! Canonical data model shared by every stage of an audit.
//!
//! Token indices are canonical. Spans are half-open `[start, end)` ranges over
//! `Instance::tokens`; more than one span marks a discontiguous expression.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

/// Binary metaphoricity label. Metaphoric is the positive class everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Metaphoric,
    Literal,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Metaphoric, Label::Literal];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Metaphoric => "metaphoric",
            Label::Literal => "literal",
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Metaphoric => Label::Literal,
            Label::Literal => Label::Metaphoric,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Dev, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Half-open token range, serialized as a two-element array `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

/// One labeled example: a tokenized context, the target expression span(s)
/// and a binary label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub dataset: String,
    pub tokens: Vec<String>,
    pub spans: Vec<Span>,
    pub label: Label,
    #[serde(default)]
    pub lemmas: Option<Vec<String>>,
    #[serde(default)]
    pub pos: Option<Vec<String>>,
    #[serde(default)]
    pub split_hint: Option<Partition>,
    /// Spans as they were before [`crate::prep::normalize_discontiguous`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_spans: Option<Vec<Span>>,
    /// Fields not known to this model; kept so files round-trip.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        dataset: impl Into<String>,
        tokens: Vec<String>,
        spans: Vec<Span>,
        label: Label,
    ) -> Self {
        Instance {
            id: id.into(),
            dataset: dataset.into(),
            tokens,
            spans,
            label,
            lemmas: None,
            pos: None,
            split_hint: None,
            original_spans: None,
            extra: BTreeMap::new(),
        }
    }

    /// Smallest range covering every span.
    pub fn merged_span(&self) -> Option<Span> {
        let start = self.spans.iter().map(|s| s.start).min()?;
        let end = self.spans.iter().map(|s| s.end).max()?;
        Some(Span::new(start, end))
    }

    pub fn in_span(&self, index: usize) -> bool {
        self.spans.iter().any(|s| s.contains(index))
    }

    /// Token indices covered by the spans, in order.
    pub fn span_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.start..s.end)
    }

    pub fn span_tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.span_indices().map(move |i| self.tokens[i].as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<Instance>,
    #[serde(default)]
    pub provenance: String,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Self {
        Dataset {
            name: name.into(),
            instances,
            provenance: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// `(metaphoric, literal)` counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let met = self
            .instances
            .iter()
            .filter(|i| i.label == Label::Metaphoric)
            .count();
        (met, self.instances.len() - met)
    }

    /// Percentage of metaphoric instances, `None` for an empty dataset.
    pub fn metaphoric_percent(&self) -> Option<f64> {
        if self.instances.is_empty() {
            return None;
        }
        let (met, _) = self.label_counts();
        Some(100.0 * met as f64 / self.instances.len() as f64)
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    NoTokens,
    NoSpans,
    EmptySpan { start: usize, end: usize },
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    SpansUnorderedOrOverlapping,
    BlankToken { index: usize },
    LemmaLengthMismatch { expected: usize, found: usize },
    PosLengthMismatch { expected: usize, found: usize },
    DuplicateId,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NoTokens => f.write_str("no tokens"),
            ViolationKind::NoSpans => f.write_str("no spans"),
            ViolationKind::EmptySpan { start, end } => write!(f, "empty span [{start},{end})"),
            ViolationKind::SpanOutOfBounds { start, end, len } => {
                write!(f, "span [{start},{end}) out of bounds for {len} tokens")
            }
            ViolationKind::SpansUnorderedOrOverlapping => {
                f.write_str("spans overlap or are not sorted by start")
            }
            ViolationKind::BlankToken { index } => {
                write!(f, "token {index} is empty or contains whitespace")
            }
            ViolationKind::LemmaLengthMismatch { expected, found } => {
                write!(f, "lemma length mismatch: expected {expected}, found {found}")
            }
            ViolationKind::PosLengthMismatch { expected, found } => {
                write!(f, "pos length mismatch: expected {expected}, found {found}")
            }
            ViolationKind::DuplicateId => f.write_str("duplicate id"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.kind)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Violations of a single instance, ignoring dataset-level id uniqueness.
pub fn validate_instance(instance: &Instance) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    let n = instance.tokens.len();
    if n == 0 {
        out.push(ViolationKind::NoTokens);
    }
    for (index, tok) in instance.tokens.iter().enumerate() {
        if tok.is_empty() || tok.chars().any(char::is_whitespace) {
            out.push(ViolationKind::BlankToken { index });
        }
    }
    if instance.spans.is_empty() {
        out.push(ViolationKind::NoSpans);
    }
    for s in &instance.spans {
        if s.start >= s.end {
            out.push(ViolationKind::EmptySpan {
                start: s.start,
                end: s.end,
            });
        } else if s.end > n {
            out.push(ViolationKind::SpanOutOfBounds {
                start: s.start,
                end: s.end,
                len: n,
            });
        }
    }
    if instance.spans.windows(2).any(|w| w[1].start < w[0].end) {
        out.push(ViolationKind::SpansUnorderedOrOverlapping);
    }
    if let Some(lemmas) = &instance.lemmas {
        if lemmas.len() != n {
            out.push(ViolationKind::LemmaLengthMismatch {
                expected: n,
                found: lemmas.len(),
            });
        }
    }
    if let Some(pos) = &instance.pos {
        if pos.len() != n {
            out.push(ViolationKind::PosLengthMismatch {
                expected: n,
                found: pos.len(),
            });
        }
    }
    out
}

/// Enumerates every invariant violation in `dataset`. An empty report means
/// the dataset is valid.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for inst in &dataset.instances {
        for kind in validate_instance(inst) {
            violations.push(Violation {
                id: inst.id.clone(),
                kind,
            });
        }
        if !seen.insert(inst.id.as_str()) {
            violations.push(Violation {
                id: inst.id.clone(),
                kind: ViolationKind::DuplicateId,
            });
        }
    }
    ValidationReport { violations }
}

/// What an instance is grouped by in a lexical split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SplitKey {
    /// Lowercased span tokens joined by single spaces.
    #[default]
    Surface,
    /// Lowercased span lemmas joined by single spaces.
    Lemma,
    /// Lemma of the k-th span token (0-based).
    Head(usize),
}

impl fmt::Display for SplitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitKey::Surface => f.write_str("surface"),
            SplitKey::Lemma => f.write_str("lemma"),
            SplitKey::Head(k) => write!(f, "head:{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown split key {0:?} (expected surface, lemma or head:<k>)")]
pub struct ParseSplitKeyError(pub String);

impl FromStr for SplitKey {
    type Err = ParseSplitKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "surface" => Ok(SplitKey::Surface),
            "lemma" => Ok(SplitKey::Lemma),
            _ => s
                .strip_prefix("head:")
                .and_then(|k| k.parse().ok())
                .map(SplitKey::Head)
                .ok_or_else(|| ParseSplitKeyError(s.to_string())),
        }
    }
}

impl Serialize for SplitKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SplitKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Why a lemma-based key could not be computed for an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum KeyFallback {
    #[error("instance {id} has no lemmas")]
    MissingLemmas { id: String },
    #[error("instance {id}: head index {k} out of range for a {len}-token span")]
    HeadOutOfRange { id: String, k: usize, len: usize },
}

/// Deterministic, lowercased grouping key of `instance` under `key`.
pub fn split_key_of(instance: &Instance, key: SplitKey) -> Result<String, KeyFallback> {
    match key {
        SplitKey::Surface => Ok(join_lower(instance.span_tokens())),
        SplitKey::Lemma => {
            let lemmas = lemmas_of(instance)?;
            Ok(join_lower(instance.span_indices().map(|i| lemmas[i].as_str())))
        }
        SplitKey::Head(k) => {
            let lemmas = lemmas_of(instance)?;
            let len = instance.span_indices().count();
            let idx = instance
                .span_indices()
                .nth(k)
                .ok_or_else(|| KeyFallback::HeadOutOfRange {
                    id: instance.id.clone(),
                    k,
                    len,
                })?;
            Ok(lemmas[idx].to_lowercase())
        }
    }
}

fn lemmas_of(instance: &Instance) -> Result<&[String], KeyFallback> {
    match &instance.lemmas {
        Some(l) if l.len() == instance.tokens.len() => Ok(l),
        _ => Err(KeyFallback::MissingLemmas {
            id: instance.id.clone(),
        }),
    }
}

fn join_lower<'a>(tokens: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for (i, t) in tokens.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.to_lowercase());
    }
    out
}

/// Keys of a whole dataset, in instance order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedKeys {
    /// The key kind actually used.
    pub effective: SplitKey,
    pub keys: Vec<String>,
    /// Set when the requested kind failed on some instance and the dataset
    /// was keyed by surface form instead.
    pub fallback: Option<KeyFallback>,
}

/// Keys every instance under `requested`, falling back to surface keys for
/// the whole dataset if any instance cannot be keyed.
pub fn resolve_keys(dataset: &Dataset, requested: SplitKey) -> ResolvedKeys {
    let attempt: Result<Vec<String>, KeyFallback> = dataset
        .instances
        .iter()
        .map(|i| split_key_of(i, requested))
        .collect();
    match attempt {
        Ok(keys) => ResolvedKeys {
            effective: requested,
            keys,
            fallback: None,
        },
        Err(fb) => ResolvedKeys {
            effective: SplitKey::Surface,
            keys: dataset
                .instances
                .iter()
                .map(|i| join_lower(i.span_tokens()))
                .collect(),
            fallback: Some(fb),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn inst(id: &str, text: &str, spans: &[(usize, usize)], label: Label) -> Instance {
        Instance::new(
            id,
            "test",
            toks(text),
            spans.iter().map(|&s| s.into()).collect(),
            label,
        )
    }

    #[test]
    fn well_formed_dataset_has_no_violations() {
        let ds = Dataset::new(
            "t",
            vec![
                inst("a", "I like dark colors", &[(2, 3)], Label::Literal),
                inst("b", "a dark age", &[(1, 2)], Label::Metaphoric),
            ],
        );
        assert!(validate(&ds).is_valid());
    }

    #[test]
    fn empty_span_is_reported() {
        let ds = Dataset::new(
            "t",
            vec![inst("x", "one two three four", &[(3, 3)], Label::Literal)],
        );
        let report = validate(&ds);
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].id, "x");
        assert!(report.violations[0].kind.to_string().starts_with("empty span"));
    }

    #[test]
    fn lemma_length_mismatch_is_reported() {
        let mut i = inst("x", "one two three", &[(0, 1)], Label::Literal);
        i.lemmas = Some(toks("one two"));
        let report = validate(&Dataset::new("t", vec![i]));
        assert_eq!(
            report.violations[0].kind,
            ViolationKind::LemmaLengthMismatch {
                expected: 3,
                found: 2
            }
        );
        assert!(report.violations[0]
            .kind
            .to_string()
            .starts_with("lemma length mismatch"));
    }

    #[test]
    fn structural_violations() {
        let mut overlapping = inst("o", "a b c d", &[(0, 2), (1, 3)], Label::Literal);
        overlapping.pos = Some(toks("X"));
        let ds = Dataset::new(
            "t",
            vec![
                overlapping,
                inst("o", "a b", &[(1, 5)], Label::Literal),
                inst("n", "a b", &[], Label::Literal),
            ],
        );
        let kinds: Vec<_> = validate(&ds).violations.into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::SpansUnorderedOrOverlapping));
        assert!(kinds.contains(&ViolationKind::PosLengthMismatch {
            expected: 4,
            found: 1
        }));
        assert!(kinds.contains(&ViolationKind::SpanOutOfBounds {
            start: 1,
            end: 5,
            len: 2
        }));
        assert!(kinds.contains(&ViolationKind::DuplicateId));
        assert!(kinds.contains(&ViolationKind::NoSpans));
    }

    #[test]
    fn validate_does_not_modify_and_is_idempotent() {
        let ds = Dataset::new("t", vec![inst("x", "a b", &[(2, 2)], Label::Literal)]);
        let before = ds.clone();
        let r1 = validate(&ds);
        let r2 = validate(&ds);
        assert_eq!(r1, r2);
        assert_eq!(ds, before);
    }

    #[test]
    fn surface_keys() {
        let i = inst("a", "I like dark colors", &[(2, 3)], Label::Literal);
        assert_eq!(split_key_of(&i, SplitKey::Surface).unwrap(), "dark");
        let i = inst("b", "Don't Rock the boat", &[(1, 4)], Label::Metaphoric);
        assert_eq!(split_key_of(&i, SplitKey::Surface).unwrap(), "rock the boat");
    }

    #[test]
    fn head_key_selects_the_adjective_or_the_noun() {
        let mut i = inst("a", "dark thoughts", &[(0, 2)], Label::Metaphoric);
        i.lemmas = Some(toks("dark thought"));
        assert_eq!(split_key_of(&i, SplitKey::Head(0)).unwrap(), "dark");
        assert_eq!(split_key_of(&i, SplitKey::Head(1)).unwrap(), "thought");
        assert_eq!(split_key_of(&i, SplitKey::Lemma).unwrap(), "dark thought");
        assert!(matches!(
            split_key_of(&i, SplitKey::Head(2)),
            Err(KeyFallback::HeadOutOfRange { k: 2, len: 2, .. })
        ));
    }

    #[test]
    fn lemma_key_without_lemmas_signals_fallback() {
        let i = inst("a", "dark thoughts", &[(0, 2)], Label::Metaphoric);
        assert!(matches!(
            split_key_of(&i, SplitKey::Lemma),
            Err(KeyFallback::MissingLemmas { .. })
        ));
        let ds = Dataset::new("t", vec![i]);
        let resolved = resolve_keys(&ds, SplitKey::Head(0));
        assert_eq!(resolved.effective, SplitKey::Surface);
        assert_eq!(resolved.keys, vec![String::from("dark thoughts")]);
        assert!(resolved.fallback.is_some());
    }

    #[test]
    fn split_key_parses_and_displays() {
        for k in [SplitKey::Surface, SplitKey::Lemma, SplitKey::Head(3)] {
            assert_eq!(k.to_string().parse::<SplitKey>().unwrap(), k);
        }
        assert!("head:x".parse::<SplitKey>().is_err());
    }

    #[test]
    fn canonical_json_shape() {
        let line = r#"{"id":"trofi-00017","dataset":"trofi","tokens":["The","latest","developments","move","us","closer","to","a","dark","age","."],"spans":[[8,9]],"label":"metaphoric","lemmas":null,"pos":null,"split_hint":"train","source":"wsj"}"#;
        let i: Instance = serde_json::from_str(line).unwrap();
        assert_eq!(i.spans, vec![Span::new(8, 9)]);
        assert_eq!(i.split_hint, Some(Partition::Train));
        assert_eq!(i.extra.get("source"), Some(&Value::from("wsj")));
        let back = serde_json::to_string(&i).unwrap();
        assert!(back.starts_with(
            r#"{"id":"trofi-00017","dataset":"trofi","tokens":["The","#
        ));
        assert!(back.contains(r#""spans":[[8,9]],"label":"metaphoric","lemmas":null,"pos":null,"split_hint":"train""#));
        assert!(back.contains(r#""source":"wsj""#));
        let again: Instance = serde_json::from_str(&back).unwrap();
        assert_eq!(again, i);
    }
}
