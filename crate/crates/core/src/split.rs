//! Train/dev/test plans: the original split, random k-fold and lexical
//! k-fold, plus a verifier for every plan invariant.
//!
//! Random folds cut a seeded permutation of the sorted ids into contiguous
//! blocks: fold `f` tests on the `f`-th block and validates on the block
//! right after it, wrapping around. Lexical folds move whole key groups:
//! groups are packed largest-first into `k` test bins, fold `f` tests on bin
//! `f` and the remaining groups fill dev and train greedily.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{resolve_keys, Dataset, Label, Partition, SplitKey};
use crate::num::round;

const RATIO_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Original,
    RandomKfold,
    LexicalKfold,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Original => "original",
            Scheme::RandomKfold => "random_kfold",
            Scheme::LexicalKfold => "lexical_kfold",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 0.7,
            dev: 0.1,
            test: 0.2,
        }
    }
}

impl Ratios {
    fn check(&self) -> Result<(), SplitError> {
        let parts = [self.train, self.dev, self.test];
        let ok = parts.iter().all(|r| r.is_finite() && *r >= 0.0)
            && self.test > 0.0
            && (parts.iter().sum::<f64>() - 1.0).abs() < 1e-6;
        if ok {
            Ok(())
        } else {
            Err(SplitError::InvalidRatios(*self))
        }
    }

    fn target(&self, p: Partition, n: usize) -> f64 {
        n as f64
            * match p {
                Partition::Train => self.train,
                Partition::Dev => self.dev,
                Partition::Test => self.test,
            }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    pub k: usize,
    pub ratios: Ratios,
    pub seed: u64,
    /// Use a single fold when the expected test partition has more than this
    /// many instances.
    pub single_fold_threshold: Option<usize>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            k: 5,
            ratios: Ratios::default(),
            seed: 0,
            single_fold_threshold: Some(10_000),
        }
    }
}

/// How dev blocks move between folds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DevPolicy {
    /// As given by the source dataset.
    Original,
    /// Dev is the block following the fold's test block.
    RotateAfterTest,
    /// Dev is filled greedily from the groups left after test.
    GreedyRemainder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub dataset: String,
    pub scheme: Scheme,
    pub k: usize,
    pub ratios: Ratios,
    /// Key actually used (lexical only).
    pub key: Option<SplitKey>,
    /// Key that was asked for, when it differs from `key`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_key: Option<SplitKey>,
    pub seed: u64,
    pub dev_policy: DevPolicy,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// One entry per fold: `(instance id, partition)` pairs sorted by id.
    pub assignment: Vec<Vec<(String, Partition)>>,
}

impl SplitPlan {
    pub fn folds(&self) -> usize {
        self.assignment.len()
    }

    /// Ids assigned to `partition` in `fold`, in id order.
    pub fn ids(&self, fold: usize, partition: Partition) -> impl Iterator<Item = &str> + '_ {
        self.assignment[fold]
            .iter()
            .filter(move |(_, p)| *p == partition)
            .map(|(id, _)| id.as_str())
    }

    pub fn partition_size(&self, fold: usize, partition: Partition) -> usize {
        self.ids(fold, partition).count()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("instances without a split hint: {}", .0.join(", "))]
    MissingHints(Vec<String>),
    #[error("dataset has {n} instances, fewer than the {k} folds requested")]
    TooFewInstances { n: usize, k: usize },
    #[error("fold count must be at least 1")]
    ZeroFolds,
    #[error("invalid ratios {0:?}: need non-negative values summing to 1 with test > 0")]
    InvalidRatios(Ratios),
}

/// Single-fold plan that mirrors each instance's `split_hint`.
pub fn plan_original(dataset: &Dataset) -> Result<SplitPlan, SplitError> {
    let missing: Vec<String> = dataset
        .instances
        .iter()
        .filter(|i| i.split_hint.is_none())
        .map(|i| i.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(SplitError::MissingHints(missing));
    }
    let mut fold: Vec<(String, Partition)> = dataset
        .instances
        .iter()
        .filter_map(|i| i.split_hint.map(|p| (i.id.clone(), p)))
        .collect();
    fold.sort();
    let n = fold.len().max(1) as f64;
    let share = |p| fold.iter().filter(|(_, q)| *q == p).count() as f64 / n;
    let ratios = Ratios {
        train: share(Partition::Train),
        dev: share(Partition::Dev),
        test: share(Partition::Test),
    };
    Ok(SplitPlan {
        dataset: dataset.name.clone(),
        scheme: Scheme::Original,
        k: 1,
        ratios,
        key: None,
        requested_key: None,
        seed: 0,
        dev_policy: DevPolicy::Original,
        warnings: Vec::new(),
        assignment: vec![fold],
    })
}

fn effective_folds(n: usize, opts: &PlanOptions, warnings: &mut Vec<String>) -> Result<usize, SplitError> {
    opts.ratios.check()?;
    if opts.k == 0 {
        return Err(SplitError::ZeroFolds);
    }
    if n < opts.k {
        return Err(SplitError::TooFewInstances { n, k: opts.k });
    }
    let expected_test = round(opts.ratios.target(Partition::Test, n)) as usize;
    match opts.single_fold_threshold {
        Some(limit) if opts.k > 1 && expected_test > limit => {
            warnings.push(format!(
                "expected test size {expected_test} exceeds {limit}; using a single fold"
            ));
            Ok(1)
        }
        _ => Ok(opts.k),
    }
}

fn covers_all(k: usize, ratios: &Ratios) -> bool {
    k as f64 * ratios.test >= 1.0 - RATIO_EPS
}

fn sorted_ids(dataset: &Dataset) -> Vec<&str> {
    let mut ids: Vec<&str> = dataset.instances.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    ids
}

/// Random k-fold plan. Depends only on the set of ids, `k`, the ratios and
/// the seed, not on instance order.
pub fn plan_random(dataset: &Dataset, opts: &PlanOptions) -> Result<SplitPlan, SplitError> {
    let n = dataset.len();
    let mut warnings = Vec::new();
    let k = effective_folds(n, opts, &mut warnings)?;
    let mut order = sorted_ids(dataset);
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));

    let n_test = round(opts.ratios.target(Partition::Test, n)) as usize;
    let n_dev = round(opts.ratios.target(Partition::Dev, n)) as usize;
    let full_cover = covers_all(k, &opts.ratios);

    let mut assignment = Vec::with_capacity(k);
    for f in 0..k {
        let start = f * n / k;
        let next = (f + 1) * n / k;
        let test_len = if full_cover {
            n_test.max(next - start)
        } else {
            n_test
        }
        .min(n);
        let dev_len = n_dev.min(n - test_len);
        let mut fold: Vec<(String, Partition)> = Vec::with_capacity(n);
        for (j, id) in (0..n).map(|j| (j, order[(start + j) % n])) {
            let part = if j < test_len {
                Partition::Test
            } else if j < test_len + dev_len {
                Partition::Dev
            } else {
                Partition::Train
            };
            fold.push((String::from(id), part));
        }
        fold.sort();
        assignment.push(fold);
    }

    Ok(SplitPlan {
        dataset: dataset.name.clone(),
        scheme: Scheme::RandomKfold,
        k,
        ratios: opts.ratios,
        key: None,
        requested_key: None,
        seed: opts.seed,
        dev_policy: DevPolicy::RotateAfterTest,
        warnings,
        assignment,
    })
}

struct Group<'a> {
    key: &'a str,
    members: Vec<usize>,
    metaphoric: usize,
}

impl Group<'_> {
    fn size(&self) -> usize {
        self.members.len()
    }

    fn majority(&self) -> Label {
        if 2 * self.metaphoric >= self.members.len() {
            Label::Metaphoric
        } else {
            Label::Literal
        }
    }
}

/// Lexical k-fold plan: every instance sharing a key lands in the same
/// partition of a fold, so no test key is ever seen in train or dev.
pub fn plan_lexical(
    dataset: &Dataset,
    key: SplitKey,
    opts: &PlanOptions,
) -> Result<SplitPlan, SplitError> {
    let n = dataset.len();
    let mut warnings = Vec::new();
    let k = effective_folds(n, opts, &mut warnings)?;
    let resolved = resolve_keys(dataset, key);
    if let Some(fb) = &resolved.fallback {
        warnings.push(format!("{key} keys unavailable ({fb}); keyed by surface form"));
    }

    let mut by_key: BTreeMap<&str, Group<'_>> = BTreeMap::new();
    for (idx, (inst, k)) in dataset.instances.iter().zip(&resolved.keys).enumerate() {
        let g = by_key.entry(k.as_str()).or_insert_with(|| Group {
            key: k.as_str(),
            members: Vec::new(),
            metaphoric: 0,
        });
        g.members.push(idx);
        g.metaphoric += usize::from(inst.label == Label::Metaphoric);
    }
    let mut groups: Vec<Group<'_>> = by_key.into_values().collect();
    groups.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.key.cmp(b.key)));

    let t_test = opts.ratios.target(Partition::Test, n);
    for g in groups.iter().filter(|g| g.size() as f64 > t_test + RATIO_EPS) {
        warnings.push(format!(
            "key {:?} covers {} of {n} instances, more than the test share; balance unattainable",
            g.key,
            g.size()
        ));
    }

    let bins = pack_bins(&groups, k, opts.seed);
    let full_cover = covers_all(k, &opts.ratios);
    let t_dev = opts.ratios.target(Partition::Dev, n);
    let t_train = opts.ratios.target(Partition::Train, n);

    let mut assignment = Vec::with_capacity(k);
    for f in 0..k {
        let mut part_of = vec![Partition::Train; groups.len()];
        let mut in_test = vec![false; groups.len()];
        let mut test_load = 0usize;
        if full_cover {
            for &g in &bins[f] {
                in_test[g] = true;
                test_load += groups[g].size();
            }
        }
        // Top up (or, when folds do not cover everything, fill) test from
        // this bin onwards so the rotation differs between folds.
        for b in (0..k).map(|d| (f + d) % k) {
            for &g in &bins[b] {
                if in_test[g] {
                    continue;
                }
                let size = groups[g].size() as f64;
                let load = test_load as f64;
                if (load + size - t_test).abs() < (load - t_test).abs() {
                    in_test[g] = true;
                    test_load += groups[g].size();
                }
            }
        }

        let (mut dev_load, mut train_load) = (0usize, 0usize);
        for (g, group) in groups.iter().enumerate() {
            if in_test[g] {
                part_of[g] = Partition::Test;
                continue;
            }
            let fill = |load: usize, target: f64| {
                if target <= 0.0 {
                    f64::INFINITY
                } else {
                    load as f64 / target
                }
            };
            if fill(dev_load, t_dev) < fill(train_load, t_train) {
                part_of[g] = Partition::Dev;
                dev_load += group.size();
            } else {
                part_of[g] = Partition::Train;
                train_load += group.size();
            }
        }

        let mut fold: Vec<(String, Partition)> = Vec::with_capacity(n);
        for (g, group) in groups.iter().enumerate() {
            for &m in &group.members {
                fold.push((dataset.instances[m].id.clone(), part_of[g]));
            }
        }
        fold.sort();
        assignment.push(fold);
    }

    Ok(SplitPlan {
        dataset: dataset.name.clone(),
        scheme: Scheme::LexicalKfold,
        k,
        ratios: opts.ratios,
        key: Some(resolved.effective),
        requested_key: (resolved.effective != key).then_some(key),
        seed: opts.seed,
        dev_policy: DevPolicy::GreedyRemainder,
        warnings,
        assignment,
    })
}

/// Largest-first packing of groups into `k` test bins. Each group goes to
/// the least-loaded bin; ties prefer the bin holding fewer instances of the
/// group's majority label, then a seeded bin order.
fn pack_bins(groups: &[Group<'_>], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rank: Vec<usize> = (0..k).collect();
    rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15));
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut load = vec![0usize; k];
    let mut label_load = vec![[0usize; 2]; k];
    for (g, group) in groups.iter().enumerate() {
        let lbl = match group.majority() {
            Label::Metaphoric => 0,
            Label::Literal => 1,
        };
        let best = (0..k)
            .min_by_key(|&b| (load[b], label_load[b][lbl], rank[b]))
            .unwrap_or(0);
        bins[best].push(g);
        load[best] += group.size();
        label_load[best][0] += group.metaphoric;
        label_load[best][1] += group.size() - group.metaphoric;
    }
    bins
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanViolation {
    DanglingId { fold: usize, id: String },
    DuplicateAssignment { fold: usize, id: String },
    UncoveredInstance { fold: usize, id: String },
    KeyLeak { fold: usize, key: String },
    NeverTested { id: String },
    HintMismatch { id: String },
    SizeOutOfTolerance {
        fold: usize,
        partition: Partition,
        size: usize,
        target: f64,
        tolerance: f64,
    },
    KeyUnavailable { detail: String },
    FoldCount { expected: usize, found: usize },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::DanglingId { fold, id } => write!(f, "fold {fold}: dangling id {id}"),
            PlanViolation::DuplicateAssignment { fold, id } => {
                write!(f, "fold {fold}: {id} assigned more than once")
            }
            PlanViolation::UncoveredInstance { fold, id } => {
                write!(f, "fold {fold}: uncovered instance {id}")
            }
            PlanViolation::KeyLeak { fold, key } => {
                write!(f, "fold {fold}: key {key:?} in test and in train/dev")
            }
            PlanViolation::NeverTested { id } => write!(f, "{id} is never in a test partition"),
            PlanViolation::HintMismatch { id } => write!(f, "{id} disagrees with its split hint"),
            PlanViolation::SizeOutOfTolerance {
                fold,
                partition,
                size,
                target,
                tolerance,
            } => write!(
                f,
                "fold {fold}: {partition} has {size} instances, target {target:.1} ± {tolerance}"
            ),
            PlanViolation::KeyUnavailable { detail } => write!(f, "split key unavailable: {detail}"),
            PlanViolation::FoldCount { expected, found } => {
                write!(f, "plan declares {expected} folds but has {found}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub violations: Vec<PlanViolation>,
}

impl PlanReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every plan invariant against `dataset`.
///
/// Random plans must hit each partition target within 2 instances; lexical
/// plans within the size of the largest key group.
pub fn verify(plan: &SplitPlan, dataset: &Dataset) -> PlanReport {
    let mut violations = Vec::new();
    let n = dataset.len();
    if plan.k != plan.assignment.len() {
        violations.push(PlanViolation::FoldCount {
            expected: plan.k,
            found: plan.assignment.len(),
        });
    }
    let index: BTreeMap<&str, usize> = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();

    let keys = match (plan.scheme, plan.key) {
        (Scheme::LexicalKfold, Some(key)) => {
            let resolved = resolve_keys(dataset, key);
            if let Some(fb) = resolved.fallback {
                violations.push(PlanViolation::KeyUnavailable {
                    detail: format!("{fb}"),
                });
            }
            Some(resolved.keys)
        }
        (Scheme::LexicalKfold, None) => {
            violations.push(PlanViolation::KeyUnavailable {
                detail: String::from("lexical plan without a key"),
            });
            None
        }
        _ => None,
    };

    let tolerance = match (&keys, plan.scheme) {
        (Some(keys), _) => {
            let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
            for k in keys {
                *sizes.entry(k.as_str()).or_default() += 1;
            }
            sizes.values().copied().max().unwrap_or(0) as f64
        }
        (None, Scheme::RandomKfold) => 2.0,
        _ => f64::INFINITY,
    };

    let mut tested = vec![false; n];
    for (fold, pairs) in plan.assignment.iter().enumerate() {
        let mut part: Vec<Option<Partition>> = vec![None; n];
        for (id, p) in pairs {
            match index.get(id.as_str()) {
                None => violations.push(PlanViolation::DanglingId {
                    fold,
                    id: id.clone(),
                }),
                Some(&i) if part[i].is_some() => {
                    violations.push(PlanViolation::DuplicateAssignment {
                        fold,
                        id: id.clone(),
                    })
                }
                Some(&i) => part[i] = Some(*p),
            }
        }
        for (i, p) in part.iter().enumerate() {
            let inst = &dataset.instances[i];
            match p {
                None => violations.push(PlanViolation::UncoveredInstance {
                    fold,
                    id: inst.id.clone(),
                }),
                Some(Partition::Test) => tested[i] = true,
                Some(_) => {}
            }
            if plan.scheme == Scheme::Original && p.is_some() && *p != inst.split_hint {
                violations.push(PlanViolation::HintMismatch {
                    id: inst.id.clone(),
                });
            }
        }

        if let Some(keys) = &keys {
            let mut test_keys = BTreeSet::new();
            let mut other_keys = BTreeSet::new();
            for (i, p) in part.iter().enumerate() {
                match p {
                    Some(Partition::Test) => test_keys.insert(keys[i].as_str()),
                    Some(_) => other_keys.insert(keys[i].as_str()),
                    None => false,
                };
            }
            for key in test_keys.intersection(&other_keys) {
                violations.push(PlanViolation::KeyLeak {
                    fold,
                    key: String::from(*key),
                });
            }
        }

        if tolerance.is_finite() {
            for p in Partition::ALL {
                let size = part.iter().filter(|q| **q == Some(p)).count();
                let target = plan.ratios.target(p, n);
                if (size as f64 - target).abs() > tolerance + RATIO_EPS {
                    violations.push(PlanViolation::SizeOutOfTolerance {
                        fold,
                        partition: p,
                        size,
                        target,
                        tolerance,
                    });
                }
            }
        }
    }

    if plan.scheme != Scheme::Original && covers_all(plan.assignment.len(), &plan.ratios) {
        for (i, t) in tested.iter().enumerate() {
            if !t {
                violations.push(PlanViolation::NeverTested {
                    id: dataset.instances[i].id.clone(),
                });
            }
        }
    }

    PlanReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Span};
    use alloc::string::ToString;

    fn ds_with_keys(keys: &[(&str, usize)]) -> Dataset {
        let mut instances = Vec::new();
        for (key, count) in keys {
            for j in 0..*count {
                let label = if j % 2 == 0 { Label::Metaphoric } else { Label::Literal };
                instances.push(Instance::new(
                    format!("{key}-{j:03}"),
                    "t",
                    vec![key.to_string(), "here".into()],
                    vec![Span::new(0, 1)],
                    label,
                ));
            }
        }
        Dataset::new("t", instances)
    }

    fn numbered(n: usize) -> Dataset {
        let keys: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let pairs: Vec<(&str, usize)> = keys.iter().map(|k| (k.as_str(), 1)).collect();
        ds_with_keys(&pairs)
    }

    fn opts(seed: u64) -> PlanOptions {
        PlanOptions {
            seed,
            ..PlanOptions::default()
        }
    }

    #[test]
    fn original_plan_mirrors_hints() {
        let mut ds = numbered(3);
        let hints = [Partition::Train, Partition::Train, Partition::Test];
        for (i, h) in ds.instances.iter_mut().zip(hints) {
            i.split_hint = Some(h);
        }
        let plan = plan_original(&ds).unwrap();
        assert_eq!(plan.folds(), 1);
        for (inst, h) in ds.instances.iter().zip(hints) {
            assert!(plan.assignment[0].contains(&(inst.id.clone(), h)));
        }
        assert!(verify(&plan, &ds).is_valid());
    }

    #[test]
    fn original_plan_allows_an_empty_dev() {
        let mut ds = numbered(1963);
        for (idx, i) in ds.instances.iter_mut().enumerate() {
            i.split_hint = Some(if idx < 1763 { Partition::Train } else { Partition::Test });
        }
        let plan = plan_original(&ds).unwrap();
        assert_eq!(plan.partition_size(0, Partition::Train), 1763);
        assert_eq!(plan.partition_size(0, Partition::Dev), 0);
        assert_eq!(plan.partition_size(0, Partition::Test), 200);
        assert!(verify(&plan, &ds).is_valid());
    }

    #[test]
    fn original_plan_requires_every_hint() {
        let mut ds = numbered(3);
        ds.instances[0].split_hint = Some(Partition::Train);
        ds.instances[2].split_hint = Some(Partition::Test);
        assert_eq!(
            plan_original(&ds),
            Err(SplitError::MissingHints(vec!["w1-000".into()]))
        );
    }

    #[test]
    fn ten_instances_five_folds() {
        let ds = numbered(10);
        let plan = plan_random(&ds, &opts(3)).unwrap();
        let mut tested = BTreeSet::new();
        for f in 0..5 {
            assert_eq!(plan.partition_size(f, Partition::Test), 2);
            tested.extend(plan.ids(f, Partition::Test));
        }
        assert_eq!(tested.len(), 10);
        assert!(verify(&plan, &ds).is_valid());
    }

    #[test]
    fn hundred_instances_split_70_10_20() {
        let ds = numbered(100);
        let plan = plan_random(&ds, &opts(11)).unwrap();
        for f in 0..5 {
            assert_eq!(plan.partition_size(f, Partition::Train), 70);
            assert_eq!(plan.partition_size(f, Partition::Dev), 10);
            assert_eq!(plan.partition_size(f, Partition::Test), 20);
        }
    }

    #[test]
    fn random_plan_is_deterministic_and_order_insensitive() {
        let ds = numbered(37);
        let a = plan_random(&ds, &opts(5)).unwrap();
        assert_eq!(a, plan_random(&ds, &opts(5)).unwrap());
        let mut rev = ds.clone();
        rev.instances.reverse();
        assert_eq!(a, plan_random(&rev, &opts(5)).unwrap());
        assert_ne!(a, plan_random(&ds, &opts(6)).unwrap());
        assert!(verify(&a, &ds).is_valid());
    }

    #[test]
    fn random_plan_rejects_tiny_datasets() {
        assert_eq!(
            plan_random(&numbered(3), &opts(0)),
            Err(SplitError::TooFewInstances { n: 3, k: 5 })
        );
    }

    #[test]
    fn large_datasets_use_one_fold() {
        let ds = numbered(60);
        let o = PlanOptions {
            single_fold_threshold: Some(10),
            ..opts(1)
        };
        let plan = plan_random(&ds, &o).unwrap();
        assert_eq!(plan.k, 1);
        assert_eq!(plan.warnings.len(), 1);
        assert!(verify(&plan, &ds).is_valid());
    }

    #[test]
    fn lexical_groups_stay_together() {
        let ds = ds_with_keys(&[("a", 4), ("b", 4), ("c", 2)]);
        let plan = plan_lexical(&ds, SplitKey::Surface, &opts(9)).unwrap();
        for f in 0..plan.folds() {
            for key in ["a", "b", "c"] {
                let parts: BTreeSet<Partition> = plan.assignment[f]
                    .iter()
                    .filter(|(id, _)| id.starts_with(key))
                    .map(|(_, p)| *p)
                    .collect();
                assert_eq!(parts.len(), 1, "fold {f} key {key}");
            }
        }
        let report = verify(&plan, &ds);
        assert!(
            report
                .violations
                .iter()
                .all(|v| !matches!(v, PlanViolation::KeyLeak { .. })),
            "{report:?}"
        );
    }

    #[test]
    fn literal_and_metaphors_of_one_expression_never_straddle() {
        // Three instances per expression, one literal and two metaphoric.
        let mut instances = Vec::new();
        for e in 0..20 {
            for j in 0..3 {
                instances.push(Instance::new(
                    format!("e{e:02}-{j}"),
                    "dunn",
                    vec![format!("word{e}"), "in".into(), format!("context{j}")],
                    vec![Span::new(0, 1)],
                    if j == 0 { Label::Literal } else { Label::Metaphoric },
                ));
            }
        }
        let ds = Dataset::new("dunn", instances);
        let plan = plan_lexical(&ds, SplitKey::Surface, &opts(4)).unwrap();
        assert!(verify(&plan, &ds).is_valid(), "{:?}", verify(&plan, &ds));
        for fold in &plan.assignment {
            for e in 0..20 {
                let prefix = format!("e{e:02}-");
                let parts: BTreeSet<_> = fold
                    .iter()
                    .filter(|(id, _)| id.starts_with(&prefix))
                    .map(|(_, p)| *p)
                    .collect();
                assert_eq!(parts.len(), 1);
            }
        }
    }

    #[test]
    fn single_key_dataset_warns() {
        let ds = ds_with_keys(&[("only", 12)]);
        let plan = plan_lexical(&ds, SplitKey::Surface, &opts(0)).unwrap();
        assert!(plan.warnings.iter().any(|w| w.contains("balance unattainable")));
        for f in 0..plan.folds() {
            let parts: BTreeSet<_> = plan.assignment[f].iter().map(|(_, p)| *p).collect();
            assert_eq!(parts.len(), 1);
        }
        assert!(verify(&plan, &ds).is_valid());
    }

    #[test]
    fn lexical_falls_back_to_surface_without_lemmas() {
        let ds = ds_with_keys(&[("a", 5), ("b", 5)]);
        let plan = plan_lexical(&ds, SplitKey::Head(0), &opts(0)).unwrap();
        assert_eq!(plan.key, Some(SplitKey::Surface));
        assert_eq!(plan.requested_key, Some(SplitKey::Head(0)));
        assert!(!plan.warnings.is_empty());
    }

    #[test]
    fn leaked_key_is_reported() {
        let ds = ds_with_keys(&[("dark", 2), ("b", 8)]);
        let mut plan = plan_lexical(&ds, SplitKey::Surface, &opts(0)).unwrap();
        let fold = &mut plan.assignment[0];
        fold.iter_mut().find(|(id, _)| id == "dark-000").unwrap().1 = Partition::Train;
        fold.iter_mut().find(|(id, _)| id == "dark-001").unwrap().1 = Partition::Test;
        let report = verify(&plan, &ds);
        assert!(report.violations.contains(&PlanViolation::KeyLeak {
            fold: 0,
            key: "dark".into()
        }));
    }

    #[test]
    fn missing_instance_is_reported() {
        let ds = numbered(20);
        let mut plan = plan_random(&ds, &opts(0)).unwrap();
        let (id, _) = plan.assignment[2].remove(0);
        plan.assignment[1].push(("ghost".into(), Partition::Train));
        let report = verify(&plan, &ds);
        assert!(report
            .violations
            .contains(&PlanViolation::UncoveredInstance { fold: 2, id }));
        assert!(report.violations.contains(&PlanViolation::DanglingId {
            fold: 1,
            id: "ghost".into()
        }));
        assert!(report.violations[0].to_string().contains("fold"));
    }
}
