//! Binary dataset construction from a token-level metaphor-annotated corpus.
//!
//! Metaphoric instances are the flagged tokens (or maximal flagged runs).
//! Literal instances are drawn, per distinct metaphoric expression, from
//! unflagged occurrences of the same surface sequence; when those run out,
//! from occurrences with the same lemma sequence; and finally from
//! occurrences with the same PoS sequence.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Instance, Label, Span};
use crate::num::ceil;

/// One corpus sentence with parallel per-token annotations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSentence {
    pub doc: String,
    pub sent: u64,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub pos: Vec<String>,
    pub met: Vec<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCorpus {
    pub sentences: Vec<CorpusSentence>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("sentence {doc}/{sent}: {field} has {found} entries for {expected} tokens")]
    LengthMismatch {
        doc: String,
        sent: u64,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sentence {doc}/{sent} appears more than once")]
    DuplicateSentence { doc: String, sent: u64 },
}

impl TokenCorpus {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for s in &self.sentences {
            let n = s.tokens.len();
            for (field, found) in [
                ("lemmas", s.lemmas.len()),
                ("pos", s.pos.len()),
                ("met", s.met.len()),
            ] {
                if found != n {
                    return Err(CorpusError::LengthMismatch {
                        doc: s.doc.clone(),
                        sent: s.sent,
                        field,
                        expected: n,
                        found,
                    });
                }
            }
            if !seen.insert((s.doc.as_str(), s.sent)) {
                return Err(CorpusError::DuplicateSentence {
                    doc: s.doc.clone(),
                    sent: s.sent,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One instance per flagged token.
    Token,
    /// One instance per maximal run of adjacent flagged tokens.
    #[default]
    Span,
}

impl core::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(Granularity::Token),
            "span" => Ok(Granularity::Span),
            other => Err(format!("unknown granularity {other:?} (expected token or span)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Literal instances wanted per metaphoric instance.
    pub ratio: f64,
    pub seed: u64,
    /// Cap on literals drawn for one expression.
    pub max_per_expression: Option<usize>,
    pub granularity: Granularity,
    pub dataset: String,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            ratio: 1.0,
            seed: 0,
            max_per_expression: None,
            granularity: Granularity::Span,
            dataset: String::from("vuac_bo"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
    #[error("max literals per expression must be at least 1")]
    InvalidMax,
    #[error("no metaphoric instances to sample literals for")]
    NoMetaphors,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl SamplerConfig {
    pub fn check(&self) -> Result<(), SamplerError> {
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(SamplerError::InvalidRatio(self.ratio));
        }
        if self.max_per_expression == Some(0) {
            return Err(SamplerError::InvalidMax);
        }
        Ok(())
    }

    /// Target percentage of metaphoric instances.
    pub fn target_metaphoric_percent(&self) -> f64 {
        100.0 / (1.0 + self.ratio)
    }
}

fn to_instance(
    s: &CorpusSentence,
    dataset: &str,
    kind: &str,
    start: usize,
    end: usize,
    label: Label,
) -> Instance {
    let mut inst = Instance::new(
        format!("{}-{}-{kind}-{start}-{end}", s.doc, s.sent),
        dataset,
        s.tokens.clone(),
        alloc::vec![Span::new(start, end)],
        label,
    );
    inst.lemmas = Some(s.lemmas.clone());
    inst.pos = Some(s.pos.clone());
    inst
}

/// Metaphoric instances in corpus order, each carrying its whole sentence as
/// context.
pub fn extract_metaphoric(
    corpus: &TokenCorpus,
    granularity: Granularity,
    dataset: &str,
) -> Vec<Instance> {
    let mut out = Vec::new();
    for s in &corpus.sentences {
        let mut i = 0;
        while i < s.met.len() {
            if !s.met[i] {
                i += 1;
                continue;
            }
            let end = match granularity {
                Granularity::Token => i + 1,
                Granularity::Span => {
                    let mut e = i;
                    while e < s.met.len() && s.met[e] {
                        e += 1;
                    }
                    e
                }
            };
            out.push(to_instance(s, dataset, "met", i, end, Label::Metaphoric));
            i = end;
        }
    }
    out
}

/// Which fallback produced a literal instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Surface,
    Lemma,
    Pos,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Surface, Tier::Lemma, Tier::Pos];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawEntry {
    pub instance_id: String,
    pub expression: String,
    pub tier: Tier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionLog {
    pub expression: String,
    pub metaphoric: usize,
    pub quota: usize,
    /// Candidates still available when each tier was reached, in tier order.
    pub candidates: [usize; 3],
    pub drawn: [usize; 3],
    pub shortfall: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingLog {
    pub seed: u64,
    pub ratio: f64,
    pub granularity: Granularity,
    pub draws: Vec<DrawEntry>,
    pub expressions: Vec<ExpressionLog>,
    pub shortfall: usize,
}

/// Position of a candidate occurrence: sentence index, start, end.
pub type Window = (usize, usize, usize);

fn join_lower<'a>(it: impl Iterator<Item = &'a String>) -> String {
    let parts: Vec<String> = it.map(|t| t.to_lowercase()).collect();
    parts.join(" ")
}

fn join_exact<'a>(it: impl Iterator<Item = &'a String>) -> String {
    let parts: Vec<&str> = it.map(String::as_str).collect();
    parts.join(" ")
}

/// Lowercased surface sequence of a span.
pub fn expression_of(instance: &Instance) -> String {
    join_lower(instance.span_indices().map(|i| &instance.tokens[i]))
}

struct Expression {
    surface: String,
    len: usize,
    lemmas: BTreeSet<String>,
    pos: BTreeSet<String>,
    count: usize,
}

/// Unflagged windows of one length, keyed per tier.
#[derive(Default)]
struct LengthIndex {
    tiers: [BTreeMap<String, Vec<Window>>; 3],
}

fn build_index(corpus: &TokenCorpus, len: usize) -> LengthIndex {
    let mut idx = LengthIndex::default();
    for (si, s) in corpus.sentences.iter().enumerate() {
        if s.tokens.len() < len {
            continue;
        }
        for start in 0..=s.tokens.len() - len {
            let end = start + len;
            if s.met[start..end].iter().any(|&m| m) {
                continue;
            }
            let w = (si, start, end);
            idx.tiers[0]
                .entry(join_lower(s.tokens[start..end].iter()))
                .or_default()
                .push(w);
            idx.tiers[1]
                .entry(join_lower(s.lemmas[start..end].iter()))
                .or_default()
                .push(w);
            idx.tiers[2]
                .entry(join_exact(s.pos[start..end].iter()))
                .or_default()
                .push(w);
        }
    }
    idx
}

/// Draws literal instances for each distinct expression of `metaphoric`.
///
/// Expressions are visited in a seeded shuffle of their sorted order. Each
/// takes `ceil(count × ratio)` literals (capped by `max_per_expression`),
/// exhausting the surface tier before the lemma tier and the lemma tier
/// before the PoS tier. A window is never emitted twice.
pub fn sample_literals(
    corpus: &TokenCorpus,
    metaphoric: &[Instance],
    config: &SamplerConfig,
) -> Result<(Vec<Instance>, SamplingLog), SamplerError> {
    config.check()?;
    corpus.validate()?;
    if metaphoric.is_empty() {
        return Err(SamplerError::NoMetaphors);
    }

    let mut expressions: BTreeMap<String, Expression> = BTreeMap::new();
    for inst in metaphoric {
        let surface = expression_of(inst);
        let lemmas = inst
            .lemmas
            .as_ref()
            .map(|l| join_lower(inst.span_indices().map(|i| &l[i])));
        let pos = inst
            .pos
            .as_ref()
            .map(|p| join_exact(inst.span_indices().map(|i| &p[i])));
        let e = expressions.entry(surface.clone()).or_insert_with(|| Expression {
            surface,
            len: inst.span_indices().count(),
            lemmas: BTreeSet::new(),
            pos: BTreeSet::new(),
            count: 0,
        });
        e.count += 1;
        e.lemmas.extend(lemmas);
        e.pos.extend(pos);
    }

    let lengths: BTreeSet<usize> = expressions.values().map(|e| e.len).collect();
    let indexes: BTreeMap<usize, LengthIndex> = lengths
        .into_iter()
        .map(|len| (len, build_index(corpus, len)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<&Expression> = expressions.values().collect();
    order.shuffle(&mut rng);

    let mut consumed: BTreeSet<Window> = BTreeSet::new();
    let mut literals = Vec::new();
    let mut draws = Vec::new();
    let mut logs = Vec::new();
    for expr in order {
        let mut quota = ceil(expr.count as f64 * config.ratio) as usize;
        if let Some(max) = config.max_per_expression {
            quota = quota.min(max);
        }
        let index = &indexes[&expr.len];
        let mut seen_for_expr: BTreeSet<Window> = BTreeSet::new();
        let mut log = ExpressionLog {
            expression: expr.surface.clone(),
            metaphoric: expr.count,
            quota,
            candidates: [0; 3],
            drawn: [0; 3],
            shortfall: 0,
        };
        let mut taken = 0usize;
        for tier in Tier::ALL {
            let keys: Vec<&String> = match tier {
                Tier::Surface => alloc::vec![&expr.surface],
                Tier::Lemma => expr.lemmas.iter().collect(),
                Tier::Pos => expr.pos.iter().collect(),
            };
            let mut pool: BTreeSet<Window> = BTreeSet::new();
            for key in keys {
                if let Some(ws) = index.tiers[tier.index()].get(key) {
                    pool.extend(
                        ws.iter()
                            .filter(|w| !consumed.contains(*w) && !seen_for_expr.contains(*w)),
                    );
                }
            }
            seen_for_expr.extend(pool.iter().copied());
            log.candidates[tier.index()] = pool.len();
            if taken >= quota {
                continue;
            }
            let mut pool: Vec<Window> = pool.into_iter().collect();
            pool.shuffle(&mut rng);
            for w in pool.into_iter().take(quota - taken) {
                consumed.insert(w);
                let (si, start, end) = w;
                let inst = to_instance(
                    &corpus.sentences[si],
                    &config.dataset,
                    "lit",
                    start,
                    end,
                    Label::Literal,
                );
                draws.push(DrawEntry {
                    instance_id: inst.id.clone(),
                    expression: expr.surface.clone(),
                    tier,
                });
                literals.push(inst);
                log.drawn[tier.index()] += 1;
                taken += 1;
            }
        }
        log.shortfall = quota - taken;
        logs.push(log);
    }

    let shortfall = logs.iter().map(|l| l.shortfall).sum();
    Ok((
        literals,
        SamplingLog {
            seed: config.seed,
            ratio: config.ratio,
            granularity: config.granularity,
            draws,
            expressions: logs,
            shortfall,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyStats {
    pub metaphoric: usize,
    pub literal: usize,
    pub metaphoric_percent: f64,
    pub target_metaphoric_percent: f64,
    /// Literal draws per tier: surface, lemma, PoS.
    pub tiers: [usize; 3],
    pub shortfall: usize,
}

/// Merges both sets into one dataset whose provenance records the tier
/// statistics and the achieved balance.
pub fn assemble(
    metaphoric: Vec<Instance>,
    literal: Vec<Instance>,
    log: &SamplingLog,
    config: &SamplerConfig,
) -> (Dataset, AssemblyStats) {
    let mut tiers = [0usize; 3];
    for d in &log.draws {
        tiers[d.tier.index()] += 1;
    }
    let (m, l) = (metaphoric.len(), literal.len());
    let stats = AssemblyStats {
        metaphoric: m,
        literal: l,
        metaphoric_percent: if m + l == 0 {
            0.0
        } else {
            100.0 * m as f64 / (m + l) as f64
        },
        target_metaphoric_percent: config.target_metaphoric_percent(),
        tiers,
        shortfall: log.shortfall,
    };
    let mut instances = metaphoric;
    instances.extend(literal);
    let provenance = format!(
        "sampled from token corpus: seed={} ratio={} granularity={:?}; {} metaphoric, {} literal ({:.1}% metaphoric, target {:.1}%); literal tiers surface={} lemma={} pos={}; shortfall={}",
        config.seed,
        config.ratio,
        config.granularity,
        m,
        l,
        stats.metaphoric_percent,
        stats.target_metaphoric_percent,
        tiers[0],
        tiers[1],
        tiers[2],
        log.shortfall
    );
    (
        Dataset {
            name: config.dataset.clone(),
            instances,
            provenance,
        },
        stats,
    )
}

/// Convenience wrapper: extract, sample and assemble.
pub fn sample_dataset(
    corpus: &TokenCorpus,
    config: &SamplerConfig,
) -> Result<(Dataset, SamplingLog, AssemblyStats), SamplerError> {
    let metaphoric = extract_metaphoric(corpus, config.granularity, &config.dataset);
    let (literal, log) = sample_literals(corpus, &metaphoric, config)?;
    let (ds, stats) = assemble(metaphoric, literal, &log, config);
    Ok((ds, log, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sent(doc: &str, n: u64, spec: &[(&str, &str, &str, bool)]) -> CorpusSentence {
        CorpusSentence {
            doc: doc.into(),
            sent: n,
            tokens: spec.iter().map(|t| t.0.into()).collect(),
            lemmas: spec.iter().map(|t| t.1.into()).collect(),
            pos: spec.iter().map(|t| t.2.into()).collect(),
            met: spec.iter().map(|t| t.3).collect(),
        }
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig {
            seed: 42,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn single_flagged_token() {
        let c = TokenCorpus {
            sentences: vec![sent(
                "d",
                0,
                &[("a", "a", "DT", false), ("bright", "bright", "JJ", true), ("idea", "idea", "NN", false)],
            )],
        };
        let m = extract_metaphoric(&c, Granularity::Span, "x");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].spans, vec![Span::new(1, 2)]);
        assert_eq!(m[0].label, Label::Metaphoric);
    }

    #[test]
    fn adjacent_flags_form_one_span() {
        let c = TokenCorpus {
            sentences: vec![sent(
                "d",
                0,
                &[("x", "x", "X", false), ("take", "take", "VB", true), ("up", "up", "RP", true)],
            )],
        };
        let spans = extract_metaphoric(&c, Granularity::Span, "x");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].spans, vec![Span::new(1, 3)]);
        assert_eq!(extract_metaphoric(&c, Granularity::Token, "x").len(), 2);
    }

    #[test]
    fn separated_flags_share_a_context() {
        let c = TokenCorpus {
            sentences: vec![sent(
                "d",
                0,
                &[("time", "time", "NN", false), ("flies", "fly", "VB", true), ("and", "and", "CC", false), ("prices", "price", "NN", false), ("soar", "soar", "VB", true)],
            )],
        };
        let m = extract_metaphoric(&c, Granularity::Span, "x");
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].tokens, m[1].tokens);
        assert_ne!(m[0].spans, m[1].spans);
    }

    #[test]
    fn surface_candidates_are_counted() {
        let c = TokenCorpus {
            sentences: vec![
                sent("d", 0, &[("bright", "bright", "JJ", true), ("idea", "idea", "NN", false)]),
                sent("d", 1, &[("bright", "bright", "JJ", false), ("sun", "sun", "NN", false)]),
                sent("d", 2, &[("Bright", "bright", "JJ", false), ("lamp", "lamp", "NN", false)]),
            ],
        };
        let m = extract_metaphoric(&c, Granularity::Span, "x");
        let (lits, log) = sample_literals(&c, &m, &cfg()).unwrap();
        assert_eq!(log.expressions[0].candidates[0], 2);
        assert_eq!(lits.len(), 1);
        assert_eq!(log.draws[0].tier, Tier::Surface);
    }

    #[test]
    fn lemma_fallback_is_logged() {
        let c = TokenCorpus {
            sentences: vec![
                sent("d", 0, &[("he", "he", "PRP", false), ("ran", "run", "VBD", true), ("it", "it", "PRP", false)]),
                sent("d", 1, &[("they", "they", "PRP", false), ("run", "run", "VBP", false), ("fast", "fast", "RB", false)]),
            ],
        };
        let m = extract_metaphoric(&c, Granularity::Span, "x");
        let (lits, log) = sample_literals(&c, &m, &cfg()).unwrap();
        assert_eq!(lits.len(), 1);
        assert_eq!(log.draws[0].tier, Tier::Lemma);
        assert_eq!(log.expressions[0].candidates, [0, 1, 0]);
    }

    #[test]
    fn exhausted_candidates_leave_a_shortfall() {
        let c = TokenCorpus {
            sentences: vec![sent(
                "d",
                0,
                &[("glowing", "glow", "VBG", true), ("praise", "praise", "NN", true)],
            )],
        };
        let (ds, log, stats) = sample_dataset(&c, &cfg()).unwrap();
        assert_eq!(log.shortfall, 1);
        assert_eq!(ds.len(), 1);
        assert_eq!(stats.metaphoric_percent, 100.0);
    }

    #[test]
    fn balance_when_quota_is_reachable_or_not() {
        let met: Vec<Instance> = (0..10)
            .map(|i| Instance::new(alloc::format!("m{i}"), "x", vec!["a".into()], vec![Span::new(0, 1)], Label::Metaphoric))
            .collect();
        let lit: Vec<Instance> = (0..10)
            .map(|i| Instance::new(alloc::format!("l{i}"), "x", vec!["a".into()], vec![Span::new(0, 1)], Label::Literal))
            .collect();
        let log = SamplingLog {
            seed: 0,
            ratio: 1.0,
            granularity: Granularity::Span,
            draws: vec![],
            expressions: vec![],
            shortfall: 0,
        };
        let (_, stats) = assemble(met.clone(), lit.clone(), &log, &cfg());
        assert_eq!(stats.metaphoric_percent, 50.0);
        let (_, stats) = assemble(met, lit[..5].to_vec(), &log, &cfg());
        assert_eq!(crate::num::round1(stats.metaphoric_percent), 66.7);
    }

    #[test]
    fn config_checks() {
        let bad = SamplerConfig { ratio: 0.0, ..cfg() };
        assert_eq!(bad.check(), Err(SamplerError::InvalidRatio(0.0)));
        let bad = SamplerConfig { max_per_expression: Some(0), ..cfg() };
        assert_eq!(bad.check(), Err(SamplerError::InvalidMax));
        let c = TokenCorpus { sentences: vec![] };
        assert_eq!(sample_literals(&c, &[], &cfg()).unwrap_err(), SamplerError::NoMetaphors);
    }

    #[test]
    fn ragged_sentence_is_rejected() {
        let mut s = sent("d", 0, &[("a", "a", "DT", true)]);
        s.pos.clear();
        let c = TokenCorpus { sentences: vec![s] };
        assert!(matches!(c.validate(), Err(CorpusError::LengthMismatch { field: "pos", .. })));
    }
}
