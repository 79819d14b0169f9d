//! Dataset preprocessing applied between ingestion and splitting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Instance, Label, Span};

/// What two instances must share to count as duplicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    /// Same tokens, spans, label, lemmas and PoS. Ids are ignored.
    #[default]
    ExactInstance,
    /// Same tokens and spans, regardless of label.
    ContextAndSpan,
}

impl core::str::FromStr for DedupScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact_instance" => Ok(DedupScope::ExactInstance),
            "context_and_span" => Ok(DedupScope::ContextAndSpan),
            other => Err(alloc::format!("unknown dedup scope {other:?}")),
        }
    }
}

/// One removed instance and the earlier instance it duplicated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub removed: String,
    pub kept: String,
}

type DedupKey<'a> = (
    &'a [String],
    &'a [Span],
    Option<Label>,
    Option<&'a [String]>,
    Option<&'a [String]>,
);

fn dedup_key(i: &Instance, scope: DedupScope) -> DedupKey<'_> {
    match scope {
        DedupScope::ExactInstance => (
            &i.tokens,
            &i.spans,
            Some(i.label),
            i.lemmas.as_deref(),
            i.pos.as_deref(),
        ),
        DedupScope::ContextAndSpan => (&i.tokens, &i.spans, None, None, None),
    }
}

/// Drops later duplicates, keeping the first occurrence in input order.
pub fn deduplicate(dataset: &Dataset, scope: DedupScope) -> (Dataset, Vec<Removal>) {
    let mut first: BTreeMap<DedupKey<'_>, &str> = BTreeMap::new();
    let mut kept = Vec::with_capacity(dataset.len());
    let mut log = Vec::new();
    for inst in &dataset.instances {
        match first.get(&dedup_key(inst, scope)) {
            Some(twin) => log.push(Removal {
                removed: inst.id.clone(),
                kept: String::from(*twin),
            }),
            None => {
                first.insert(dedup_key(inst, scope), &inst.id);
                kept.push(inst.clone());
            }
        }
    }
    let out = Dataset {
        name: dataset.name.clone(),
        instances: kept,
        provenance: dataset.provenance.clone(),
    };
    (out, log)
}

/// Replaces the spans of a discontiguous expression by the single range from
/// its first to its last token. The original spans move to
/// `original_spans`. Single-span instances are returned unchanged.
pub fn normalize_discontiguous(instance: &Instance) -> Instance {
    let mut out = instance.clone();
    if instance.spans.len() > 1 {
        if let Some(merged) = instance.merged_span() {
            out.original_spans = Some(core::mem::replace(&mut out.spans, vec![merged]));
        }
    }
    out
}

/// Groups of instance ids that share a sentence context but target different
/// spans or different expressions.
///
/// Two instances are linked when they have identical tokens with different
/// spans, or identical tokens before and after the merged span with
/// different tokens inside it. Groups are the connected components with at
/// least two members, each listed in dataset order.
pub fn detect_context_duplication(dataset: &Dataset) -> Vec<Vec<String>> {
    let n = dataset.len();
    let mut uf = UnionFind::new(n);

    let mut by_tokens: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
    let mut by_frame: BTreeMap<(&[String], &[String]), Vec<usize>> = BTreeMap::new();
    for (idx, inst) in dataset.instances.iter().enumerate() {
        by_tokens.entry(&inst.tokens).or_default().push(idx);
        if let Some(m) = inst.merged_span() {
            if m.end <= inst.tokens.len() && m.start < m.end {
                let frame = (&inst.tokens[..m.start], &inst.tokens[m.end..]);
                by_frame.entry(frame).or_default().push(idx);
            }
        }
    }

    for members in by_tokens.values() {
        link_if_distinct(&mut uf, members, |i| {
            SpanOrWords::Spans(&dataset.instances[i].spans)
        });
    }
    for members in by_frame.values() {
        link_if_distinct(&mut uf, members, |i| {
            let inst = &dataset.instances[i];
            let m = inst.merged_span().unwrap_or(Span::new(0, 0));
            SpanOrWords::Words(&inst.tokens[m.start..m.end])
        });
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for idx in 0..n {
        components.entry(uf.find(idx)).or_default().push(idx);
    }
    let mut groups: Vec<Vec<usize>> = components.into_values().filter(|g| g.len() >= 2).collect();
    groups.sort_by_key(|g| g[0]);
    groups
        .into_iter()
        .map(|g| {
            g.into_iter()
                .map(|i| dataset.instances[i].id.clone())
                .collect()
        })
        .collect()
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum SpanOrWords<'a> {
    Spans(&'a [Span]),
    Words(&'a [String]),
}

// Within a bucket, every member differs from at least one other member as
// soon as two distinct values exist, so the whole bucket is one component.
fn link_if_distinct<'a>(
    uf: &mut UnionFind,
    members: &[usize],
    value: impl Fn(usize) -> SpanOrWords<'a>,
) {
    if members.len() < 2 {
        return;
    }
    let first = value(members[0]);
    if members[1..].iter().any(|&m| value(m) != first) {
        for &m in &members[1..] {
            uf.union(members[0], m);
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label::{Literal, Metaphoric};

    fn inst(id: &str, text: &str, spans: &[(usize, usize)], label: Label) -> Instance {
        Instance::new(
            id,
            "t",
            text.split(' ').map(String::from).collect(),
            spans.iter().map(|&s| s.into()).collect(),
            label,
        )
    }

    #[test]
    fn identical_instances_are_removed_once() {
        let ds = Dataset::new(
            "t",
            vec![
                inst("a", "a dark age", &[(1, 2)], Metaphoric),
                inst("b", "a dark age", &[(1, 2)], Metaphoric),
                inst("c", "dark colors", &[(0, 1)], Literal),
            ],
        );
        let (out, log) = deduplicate(&ds, DedupScope::ExactInstance);
        assert_eq!(out.len(), 2);
        assert_eq!(
            log,
            vec![Removal {
                removed: "b".into(),
                kept: "a".into()
            }]
        );
    }

    #[test]
    fn label_participates_in_exact_equality() {
        let ds = Dataset::new(
            "t",
            vec![
                inst("a", "a dark age", &[(1, 2)], Metaphoric),
                inst("b", "a dark age", &[(1, 2)], Literal),
            ],
        );
        assert_eq!(deduplicate(&ds, DedupScope::ExactInstance).0.len(), 2);
        let (out, log) = deduplicate(&ds, DedupScope::ContextAndSpan);
        assert_eq!(out.instances[0].id, "a");
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn repeated_sentences_are_collapsed_before_splitting() {
        let s = "Stocks fell as investors pulled back";
        let ds = Dataset::new(
            "trofi",
            vec![
                inst("w1", s, &[(1, 2)], Literal),
                inst("w2", "Prices fell sharply", &[(1, 2)], Literal),
                inst("w3", s, &[(1, 2)], Literal),
                inst("w4", s, &[(1, 2)], Literal),
            ],
        );
        let (out, log) = deduplicate(&ds, DedupScope::ExactInstance);
        let ids: Vec<_> = out.instances.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["w1", "w2"]);
        assert!(log.iter().all(|r| r.kept == "w1"));
        assert_eq!(deduplicate(&out, DedupScope::ExactInstance).1.len(), 0);
    }

    #[test]
    fn discontiguous_spans_merge() {
        let i = inst("p", "rock the political boat", &[(0, 2), (3, 4)], Metaphoric);
        let n = normalize_discontiguous(&i);
        assert_eq!(n.spans, vec![Span::new(0, 4)]);
        assert_eq!(n.original_spans, Some(vec![Span::new(0, 2), Span::new(3, 4)]));
        assert_eq!(n.label, i.label);

        let i = inst("q", "a b c d e f g", &[(1, 2), (5, 6)], Literal);
        assert_eq!(normalize_discontiguous(&i).spans, vec![Span::new(1, 6)]);

        let single = inst("s", "I like dark colors", &[(2, 3)], Literal);
        assert_eq!(normalize_discontiguous(&single), single);
    }

    #[test]
    fn triples_form_one_group() {
        let ds = Dataset::new(
            "chak",
            vec![
                inst("c1", "he devoured the book quickly", &[(1, 2)], Metaphoric),
                inst("c2", "he read the book quickly", &[(1, 2)], Literal),
                inst("c3", "he swallowed the book quickly", &[(1, 2)], Metaphoric),
                inst("x", "something else entirely", &[(0, 1)], Literal),
            ],
        );
        assert_eq!(
            detect_context_duplication(&ds),
            vec![vec![String::from("c1"), "c2".into(), "c3".into()]]
        );
    }

    #[test]
    fn distinct_sentences_have_no_groups() {
        let ds = Dataset::new(
            "t",
            vec![
                inst("a", "a dark age", &[(1, 2)], Metaphoric),
                inst("b", "I like dark colors", &[(2, 3)], Literal),
            ],
        );
        assert!(detect_context_duplication(&ds).is_empty());
    }

    #[test]
    fn same_sentence_different_span_is_one_pair() {
        let ds = Dataset::new(
            "vuac",
            vec![
                inst("a", "time flies when prices soar", &[(1, 2)], Metaphoric),
                inst("b", "time flies when prices soar", &[(4, 5)], Metaphoric),
            ],
        );
        assert_eq!(
            detect_context_duplication(&ds),
            vec![vec![String::from("a"), "b".into()]]
        );
    }
}
