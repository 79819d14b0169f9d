//! Partial-input bias auditing for span-labeled figurative-language datasets.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! transformation over in-memory data: the companion `figbias` crate owns
//! file formats, adapters and the command line.
//!
//! The pipeline mirrors how a dataset audit is run:
//!
//! 1. [`corpus`] holds the canonical [`Instance`]/[`Dataset`] model and its
//!    validation rules.
//! 2. [`prep`] deduplicates, merges discontiguous spans and reports
//!    duplicated contexts.
//! 3. [`split`] builds original, random and lexical k-fold [`SplitPlan`]s.
//! 4. [`ablation`] renders instances as full input, expression-only, or
//!    expression-masked text.
//! 5. [`baselines`] trains majority, memorizer and naive Bayes classifiers on
//!    every fold and mode, producing an [`EvalReport`] through [`metrics`].
//!
//! [`sampler`] is independent of the audit: it builds balanced binary
//! datasets from token-level annotated corpora.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod ablation;
pub mod baselines;
pub mod corpus;
pub mod metrics;
pub mod prep;
pub mod report;
pub mod sampler;
pub mod split;

mod num;

pub use num::round1;

pub use ablation::{ablate, AblatedExample, AblationError, Mode};
pub use baselines::{run_audit, AuditError, AuditOptions, Classifier};
pub use corpus::{split_key_of, validate, Dataset, Instance, Label, Partition, Span, SplitKey};
pub use metrics::{metrics, relative_gap, ConfusionCounts, MetricBundle};
pub use report::{EvalReport, ReportFile, REPORT_SCHEMA_VERSION};
pub use split::{plan_lexical, plan_original, plan_random, verify, PlanOptions, SplitPlan};
