//! Declarative adapters from third-party dataset files to canonical
//! instances.
//!
//! An [`AdapterSpec`] names a parser kind (delimited, JSONL or XML), where
//! the sentence, expression and label live in each record, and how source
//! labels map to metaphoric/literal. Built-in presets cover the common
//! benchmark layouts; custom specs are TOML files with the same fields.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use figbias_core::corpus::{validate, Dataset, Instance, Label, Partition, Span};
use figbias_core::prep::{deduplicate, normalize_discontiguous, DedupScope, Removal};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Csv,
    Jsonl,
    Xml,
}

/// Locates the expression inside the sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpanRule {
    /// Field holds the expression text. A contiguous match wins; otherwise
    /// the words are matched in order, possibly with gaps.
    Phrase { field: String },
    /// Field holds a single token index.
    Index {
        field: String,
        #[serde(default)]
        one_based: bool,
    },
    /// Fields hold a token range, end exclusive.
    Range {
        start: String,
        end: String,
        #[serde(default)]
        one_based: bool,
    },
    /// Fields hold character offsets into the text field, end exclusive.
    Chars { start: String, end: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fields {
    pub id: Option<String>,
    /// Raw sentence, tokenized on ingestion.
    pub text: Option<String>,
    /// Pre-tokenized sentence: a JSON array or a whitespace-separated string.
    pub tokens: Option<String>,
    pub label: String,
    pub span: SpanRule,
    pub lemmas: Option<String>,
    pub pos: Option<String>,
    pub split: Option<String>,
}

/// Binarizes a graded metaphoricity score: at or above the threshold is
/// metaphoric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRule {
    pub scale: (f64, f64),
    /// Midpoint of `scale` when unset.
    pub threshold: Option<f64>,
}

impl ScoreRule {
    pub fn effective_threshold(&self, override_: Option<f64>) -> f64 {
        override_
            .or(self.threshold)
            .unwrap_or((self.scale.0 + self.scale.1) / 2.0)
    }
}

/// Keeps only records whose field equals the value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    pub field: String,
    pub equals: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSpec {
    /// Dataset tag written into every instance.
    pub dataset: String,
    pub format: Format,
    /// XML element holding one record.
    #[serde(default)]
    pub record: Option<String>,
    pub fields: Fields,
    /// Source label to canonical label. Must cover every observed label.
    #[serde(default)]
    pub labels: BTreeMap<String, Label>,
    #[serde(default)]
    pub score: Option<ScoreRule>,
    #[serde(default)]
    pub filter: Option<Filter>,
    /// Keep only the expression tokens, dropping the sentence.
    #[serde(default)]
    pub ignore_context: bool,
    /// Merge discontiguous expressions into one range on ingestion.
    #[serde(default)]
    pub merge_discontiguous: bool,
    /// Expected share of metaphoric instances, in percent.
    #[serde(default)]
    pub expected_met: Option<(f64, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("record {record}: {message}")]
    Parse { record: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error("record {record}: unmapped label {label:?}")]
    UnmappedLabel { record: usize, label: String },
    #[error("record {record}: cannot resolve span: {message}")]
    Span { record: usize, message: String },
    #[error("record {record}: missing field {field:?}")]
    MissingField { record: usize, field: String },
    #[error("spec: {0}")]
    Spec(String),
    #[error("unknown adapter {0:?}; built-in adapters: {1}")]
    UnknownAdapter(String, String),
    #[error("ingested dataset is invalid: {0}")]
    Invalid(String),
}

const PRESETS: &str = include_str!("../presets.toml");

/// Built-in adapter specs keyed by name.
pub fn presets() -> BTreeMap<String, AdapterSpec> {
    toml::from_str(PRESETS).expect("built-in presets parse")
}

/// A preset name, or a path to a TOML spec.
pub fn resolve_adapter(name_or_path: &str) -> Result<AdapterSpec, AdapterError> {
    if let Some(spec) = presets().remove(name_or_path) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        let text =
            fs::read_to_string(path).map_err(|e| AdapterError::Io(name_or_path.to_string(), e))?;
        return toml::from_str(&text).map_err(|e| AdapterError::Spec(e.to_string()));
    }
    let names: Vec<String> = presets().into_keys().collect();
    Err(AdapterError::UnknownAdapter(
        name_or_path.to_string(),
        names.join(", "),
    ))
}

pub type Record = BTreeMap<String, Value>;

/// Parses the raw file into field maps, in file order.
pub fn read_records(spec: &AdapterSpec, text: &str) -> Result<Vec<Record>, AdapterError> {
    match spec.format {
        Format::Tsv | Format::Csv => {
            let delimiter = if spec.format == Format::Tsv { b'\t' } else { b',' };
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .quoting(spec.format == Format::Csv)
                .from_reader(text.as_bytes());
            let headers = reader
                .headers()
                .map_err(|e| AdapterError::Format(e.to_string()))?
                .clone();
            let mut out = Vec::new();
            for (i, row) in reader.records().enumerate() {
                let row = row.map_err(|e| AdapterError::Parse {
                    record: i,
                    message: e.to_string(),
                })?;
                out.push(
                    headers
                        .iter()
                        .zip(row.iter())
                        .map(|(h, v)| (h.to_string(), Value::String(v.to_string())))
                        .collect(),
                );
            }
            Ok(out)
        }
        Format::Jsonl => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str::<Record>(line).map_err(|e| AdapterError::Parse {
                    record: i,
                    message: e.to_string(),
                })
            })
            .collect(),
        Format::Xml => {
            let doc = roxmltree::Document::parse(text)
                .map_err(|e| AdapterError::Format(e.to_string()))?;
            let tag = spec.record.as_deref().unwrap_or("instance");
            Ok(doc
                .descendants()
                .filter(|n| n.has_tag_name(tag))
                .map(|n| {
                    let mut rec: Record = n
                        .attributes()
                        .map(|a| (a.name().to_string(), Value::String(a.value().to_string())))
                        .collect();
                    for child in n.children().filter(|c| c.is_element()) {
                        let text: String = child
                            .descendants()
                            .filter(|d| d.is_text())
                            .filter_map(|d| d.text())
                            .collect();
                        rec.insert(
                            child.tag_name().name().to_string(),
                            Value::String(text.trim().to_string()),
                        );
                    }
                    rec
                })
                .collect())
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn get(rec: &Record, field: &str, record: usize) -> Result<String, AdapterError> {
    rec.get(field)
        .and_then(scalar)
        .ok_or_else(|| AdapterError::MissingField {
            record,
            field: field.to_string(),
        })
}

fn get_index(rec: &Record, field: &str, record: usize) -> Result<usize, AdapterError> {
    let raw = get(rec, field, record)?;
    raw.trim().parse().map_err(|_| AdapterError::Span {
        record,
        message: format!("field {field:?} is not a token index: {raw:?}"),
    })
}

fn get_sequence(rec: &Record, field: &str, record: usize) -> Result<Vec<String>, AdapterError> {
    match rec.get(field) {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                scalar(v).map(|s| s.nfc().collect()).ok_or_else(|| AdapterError::Parse {
                    record,
                    message: format!("field {field:?} holds a non-scalar item"),
                })
            })
            .collect(),
        Some(v) => match scalar(v) {
            Some(s) => Ok(s.nfc().collect::<String>().split_whitespace().map(String::from).collect()),
            None => Err(AdapterError::MissingField {
                record,
                field: field.to_string(),
            }),
        },
        None => Err(AdapterError::MissingField {
            record,
            field: field.to_string(),
        }),
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}' | '\u{2013}' | '\u{2014}'
        )
}

/// A token with its character offsets, end exclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace, then peels leading and trailing punctuation off
/// each chunk as one-character tokens. Offsets count chars, not bytes.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let (mut lo, mut hi) = (start, i);
        let mut trailing = Vec::new();
        while lo < hi && is_punct(chars[lo]) {
            out.push(Token {
                text: chars[lo].to_string(),
                start: lo,
                end: lo + 1,
            });
            lo += 1;
        }
        while hi > lo && is_punct(chars[hi - 1]) {
            trailing.push(Token {
                text: chars[hi - 1].to_string(),
                start: hi - 1,
                end: hi,
            });
            hi -= 1;
        }
        if lo < hi {
            out.push(Token {
                text: chars[lo..hi].iter().collect(),
                start: lo,
                end: hi,
            });
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Groups sorted token indices into maximal runs.
fn runs(indices: &[usize]) -> Vec<Span> {
    let mut spans: Vec<Span> = Vec::new();
    for &i in indices {
        match spans.last_mut() {
            Some(s) if s.end == i => s.end = i + 1,
            _ => spans.push(Span::new(i, i + 1)),
        }
    }
    spans
}

/// Case-insensitive match of `phrase` in `tokens`: the first contiguous
/// occurrence, else the earliest in-order occurrence with gaps.
pub fn match_phrase(tokens: &[String], phrase: &[String]) -> Option<Vec<Span>> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return None;
    }
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let want: Vec<String> = phrase.iter().map(|t| t.to_lowercase()).collect();
    if let Some(i) = lower.windows(want.len()).position(|w| w == want.as_slice()) {
        return Some(vec![Span::new(i, i + want.len())]);
    }
    let mut picked = Vec::with_capacity(want.len());
    let mut from = 0;
    for w in &want {
        let at = from + lower[from..].iter().position(|t| t == w)?;
        picked.push(at);
        from = at + 1;
    }
    Some(runs(&picked))
}

fn chars_to_tokens(tokens: &[Token], start: usize, end: usize) -> Option<Span> {
    let hit: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.start < end && start < t.end)
        .map(|(i, _)| i)
        .collect();
    Some(Span::new(*hit.first()?, hit.last()? + 1))
}

fn parse_partition(raw: &str, record: usize) -> Result<Partition, AdapterError> {
    match raw.trim().to_lowercase().as_str() {
        "train" | "training" => Ok(Partition::Train),
        "dev" | "val" | "valid" | "validation" => Ok(Partition::Dev),
        "test" => Ok(Partition::Test),
        other => Err(AdapterError::Parse {
            record,
            message: format!("unknown split value {other:?}"),
        }),
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    pub binarize_threshold: Option<f64>,
    /// `None` skips deduplication.
    pub dedup: Option<DedupScope>,
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub removals: Vec<Removal>,
    pub warnings: Vec<String>,
    pub threshold: Option<f64>,
}

/// Converts parsed records into a validated dataset.
///
/// Record indices in errors count records in file order, before filtering.
pub fn ingest_records(
    spec: &AdapterSpec,
    records: &[Record],
    opts: &IngestOptions,
) -> Result<Ingested, AdapterError> {
    let f = &spec.fields;
    if f.text.is_none() && f.tokens.is_none() {
        return Err(AdapterError::Spec("fields.text or fields.tokens is required".into()));
    }
    if matches!(f.span, SpanRule::Chars { .. }) && f.text.is_none() {
        return Err(AdapterError::Spec("char offsets need fields.text".into()));
    }
    let threshold = spec.score.map(|s| s.effective_threshold(opts.binarize_threshold));
    let mut instances = Vec::new();
    let mut filtered = 0;
    for (r, rec) in records.iter().enumerate() {
        if let Some(filter) = &spec.filter {
            if rec.get(&filter.field).and_then(scalar).as_deref() != Some(filter.equals.as_str()) {
                filtered += 1;
                continue;
            }
        }
        let raw_label = get(rec, &f.label, r)?;
        let label = match (spec.labels.get(raw_label.trim()), threshold) {
            (Some(l), _) => *l,
            (None, Some(t)) => {
                let score: f64 = raw_label.trim().parse().map_err(|_| AdapterError::UnmappedLabel {
                    record: r,
                    label: raw_label.clone(),
                })?;
                if score >= t {
                    Label::Metaphoric
                } else {
                    Label::Literal
                }
            }
            (None, None) => {
                return Err(AdapterError::UnmappedLabel {
                    record: r,
                    label: raw_label,
                })
            }
        };

        let (tokens, offsets): (Vec<String>, Option<Vec<Token>>) = match (&f.tokens, &f.text) {
            (Some(field), _) => (get_sequence(rec, field, r)?, None),
            (None, Some(field)) => {
                let text: String = get(rec, field, r)?.nfc().collect();
                let toks = tokenize(&text);
                (toks.iter().map(|t| t.text.clone()).collect(), Some(toks))
            }
            (None, None) => unreachable!("checked above"),
        };
        let span_err = |message: String| AdapterError::Span { record: r, message };
        let spans = match &f.span {
            SpanRule::Phrase { field } => {
                let phrase: String = get(rec, field, r)?.nfc().collect();
                let words: Vec<String> = tokenize(&phrase).into_iter().map(|t| t.text).collect();
                match_phrase(&tokens, &words)
                    .ok_or_else(|| span_err(format!("{phrase:?} does not occur in the sentence")))?
            }
            SpanRule::Index { field, one_based } => {
                let i = get_index(rec, field, r)?;
                let i = if *one_based {
                    i.checked_sub(1).ok_or_else(|| span_err("index 0 is not one-based".into()))?
                } else {
                    i
                };
                vec![Span::new(i, i + 1)]
            }
            SpanRule::Range {
                start,
                end,
                one_based,
            } => {
                let (s, e) = (get_index(rec, start, r)?, get_index(rec, end, r)?);
                let shift = usize::from(*one_based);
                vec![Span::new(s.saturating_sub(shift), e.saturating_sub(shift))]
            }
            SpanRule::Chars { start, end } => {
                let (s, e) = (get_index(rec, start, r)?, get_index(rec, end, r)?);
                let toks = offsets.as_deref().unwrap_or_default();
                vec![chars_to_tokens(toks, s, e)
                    .ok_or_else(|| span_err(format!("characters [{s},{e}) cover no token")))?]
            }
        };
        if let Some(bad) = spans.iter().find(|s| s.start >= s.end || s.end > tokens.len()) {
            return Err(span_err(format!(
                "[{},{}) is outside a {}-token sentence",
                bad.start,
                bad.end,
                tokens.len()
            )));
        }

        let id = match &f.id {
            Some(field) => get(rec, field, r)?,
            None => format!("{}-{r:05}", spec.dataset),
        };
        let mut inst = Instance::new(id, spec.dataset.clone(), tokens, spans, label);
        // Optional fields may be absent from individual records.
        let present = |field: &'_ Option<String>| -> Option<String> {
            field.clone().filter(|f| rec.contains_key(f))
        };
        if let Some(field) = present(&f.lemmas) {
            inst.lemmas = Some(get_sequence(rec, &field, r)?);
        }
        if let Some(field) = present(&f.pos) {
            inst.pos = Some(get_sequence(rec, &field, r)?);
        }
        if let Some(field) = present(&f.split) {
            let raw = get(rec, &field, r).unwrap_or_default();
            if !raw.trim().is_empty() {
                inst.split_hint = Some(parse_partition(&raw, r)?);
            }
        }
        if spec.merge_discontiguous {
            inst = normalize_discontiguous(&inst);
        }
        if spec.ignore_context {
            inst = drop_context(inst);
        }
        instances.push(inst);
    }

    let mut dataset = Dataset::new(spec.dataset.clone(), instances);
    let removals = match opts.dedup {
        Some(scope) => {
            let (kept, removals) = deduplicate(&dataset, scope);
            dataset = kept;
            removals
        }
        None => Vec::new(),
    };
    let report = validate(&dataset);
    if let Some(v) = report.violations.first() {
        return Err(AdapterError::Invalid(format!(
            "{} violation(s), first: {}: {}",
            report.len(),
            v.id,
            v.kind
        )));
    }

    let mut warnings = Vec::new();
    let met = dataset.metaphoric_percent();
    if let (Some((lo, hi)), Some(p)) = (spec.expected_met, met) {
        if p < lo || p > hi {
            warnings.push(format!(
                "{}: {p:.1}% metaphoric is outside the expected range [{lo}, {hi}]",
                spec.dataset
            ));
        }
    }
    let mut provenance = format!(
        "ingested {} with format {:?}: {} records, {} filtered, {} duplicates removed",
        if opts.source.is_empty() { "<memory>" } else { &opts.source },
        spec.format,
        records.len(),
        filtered,
        removals.len()
    );
    if let Some(t) = threshold {
        provenance.push_str(&format!("; binarized at score >= {t}"));
    }
    if spec.ignore_context {
        provenance.push_str("; context ignored");
    }
    dataset.provenance = provenance;
    Ok(Ingested {
        dataset,
        removals,
        warnings,
        threshold,
    })
}

/// Keeps only the expression tokens; the span then covers everything.
fn drop_context(inst: Instance) -> Instance {
    let keep: Vec<usize> = inst.span_indices().collect();
    let pick = |v: &Vec<String>| keep.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
    let mut out = inst.clone();
    out.tokens = pick(&inst.tokens);
    out.lemmas = inst.lemmas.as_ref().map(pick);
    out.pos = inst.pos.as_ref().map(pick);
    out.spans = vec![Span::new(0, keep.len())];
    out.original_spans = None;
    out
}

pub fn ingest(path: &Path, spec: &AdapterSpec, opts: &IngestOptions) -> Result<Ingested, AdapterError> {
    let text = fs::read_to_string(path).map_err(|e| AdapterError::Io(path.display().to_string(), e))?;
    let records = read_records(spec, &text)?;
    let opts = IngestOptions {
        source: path.display().to_string(),
        ..opts.clone()
    };
    ingest_records(spec, &records, &opts)
}
