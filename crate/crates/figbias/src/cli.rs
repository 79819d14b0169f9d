//! The `figbias` command line.
//!
//! Every subcommand reads its inputs from disk and writes its outputs to
//! disk, so each step can be replayed alone. Failures print one JSON line
//! `{"stage": ..., "error": ...}` on stderr and exit with status 2.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use figbias_core::ablation::{ablate_all, Mode};
use figbias_core::baselines::{run_audit, AuditOptions, Classifier};
use figbias_core::corpus::{validate, Dataset, SplitKey};
use figbias_core::prep::{detect_context_duplication, DedupScope};
use figbias_core::report::{EvalReport, ReportFile};
use figbias_core::sampler::{sample_dataset, Granularity, SamplerConfig};
use figbias_core::split::{plan_lexical, plan_original, plan_random, PlanOptions, Ratios, SplitPlan};
use serde::Serialize;

use crate::adapter::{ingest, presets, resolve_adapter, IngestOptions};
use crate::config::AuditConfig;
use crate::emit::{render, ReportFormat};
use crate::export::export;
use crate::io::{
    read_corpus, read_dataset, read_json, read_report, write_dataset, write_json, write_jsonl,
    write_text,
};

pub const SEED_ENV: &str = "FIGBIAS_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "figbias",
    version,
    about = "Audit metaphor and idiom datasets for lexical memorization and context bias"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a third-party dataset file to canonical JSONL.
    Ingest(IngestArgs),
    /// Report invariant violations and duplicated contexts.
    Validate(ValidateArgs),
    /// Render instances as default, only_pme or masked text.
    Ablate(AblateArgs),
    /// Build an original, random or lexical k-fold plan.
    Split(SplitArgs),
    /// Train and score the baselines on every fold and mode of a plan.
    Audit(AuditArgs),
    /// Build a balanced dataset from a token-annotated corpus.
    Sample(SampleArgs),
    /// Merge report files and render them as markdown, CSV or JSON.
    Report(ReportArgs),
    /// Write per-fold, per-mode train/dev/test JSONL for external trainers.
    Export(ExportArgs),
    /// Run ingest, split, ablate, audit and report from a config file.
    Run(RunArgs),
    /// List the built-in adapters.
    Adapters,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Built-in adapter name or path to a TOML adapter spec.
    #[arg(long)]
    pub adapter: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Canonical JSONL output; removals go to `<out>.dedup.log`.
    #[arg(long)]
    pub out: PathBuf,
    /// Score threshold for graded datasets (default: scale midpoint).
    #[arg(long)]
    pub binarize_threshold: Option<f64>,
    /// exact_instance, context_and_span or none.
    #[arg(long, default_value = "exact_instance")]
    pub dedup: String,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// default, only_pme or masked.
    #[arg(long)]
    pub mode: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// original, random or lexical.
    #[arg(long)]
    pub scheme: String,
    /// surface, lemma or head:<k> (lexical only).
    #[arg(long, default_value = "surface")]
    pub key: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Required for random and lexical; defaults to $FIGBIAS_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// train,dev,test shares.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
    /// Use one fold when the expected test size exceeds this; 0 disables.
    #[arg(long, default_value_t = 10_000)]
    pub single_fold_threshold: usize,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value = "default,only_pme,masked")]
    pub modes: String,
    #[arg(long, default_value = "majority,memorizer,nb")]
    pub classifiers: String,
    /// Pick naive Bayes smoothing on dev data from this comma list.
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// Add bigram features to naive Bayes.
    #[arg(long)]
    pub bigrams: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Token corpus JSONL, one sentence per line.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Literal instances per metaphoric instance.
    #[arg(long, default_value_t = 1.0)]
    pub ratio: f64,
    /// Defaults to $FIGBIAS_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// token or span.
    #[arg(long, default_value = "span")]
    pub granularity: String,
    #[arg(long)]
    pub max_per_expression: Option<usize>,
    #[arg(long, default_value = "vuac_bo")]
    pub dataset: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Tier statistics and every draw, as JSON.
    #[arg(long)]
    pub log: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report JSON files; several are merged in order.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    /// Standard output when unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value = "default,only_pme,masked")]
    pub modes: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// TOML or JSON audit config.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub key: Option<String>,
    /// Comma list of original, random, lexical.
    #[arg(long)]
    pub schemes: Option<String>,
    #[arg(long)]
    pub modes: Option<String>,
    #[arg(long)]
    pub classifiers: Option<String>,
    #[arg(long)]
    pub single_fold_threshold: Option<usize>,
    #[arg(long)]
    pub export: bool,
}

/// Failure attributed to a pipeline stage.
#[derive(Debug, Serialize)]
pub struct StageError {
    pub stage: String,
    pub error: String,
}

impl StageError {
    pub fn new(stage: &str, error: impl std::fmt::Display) -> Self {
        StageError {
            stage: stage.to_string(),
            error: error.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, StageError>;

fn at<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> StageError {
    move |e| StageError::new(stage, e)
}

fn note(msg: impl std::fmt::Display) {
    eprintln!("{msg}");
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::to_string(&e).unwrap_or_else(|_| format!("{e:?}"));
            let _ = writeln!(std::io::stderr(), "{line}");
            ExitCode::from(2)
        }
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Split(a) => cmd_split(&a),
        Command::Audit(a) => cmd_audit(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Export(a) => cmd_export(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Adapters => {
            for (name, spec) in presets() {
                println!("{name}\t{:?}", spec.format);
            }
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, stage: &'static str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(at(stage)))
        .collect()
}

fn parse_dedup(raw: &str, stage: &'static str) -> Result<Option<DedupScope>> {
    if raw == "none" {
        Ok(None)
    } else {
        raw.parse().map(Some).map_err(at(stage))
    }
}

/// Flag, then config, then `$FIGBIAS_SEED`.
fn seed_or_env(flag: Option<u64>, config: Option<u64>) -> Result<Option<u64>> {
    if let Some(s) = flag.or(config) {
        return Ok(Some(s));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| StageError::new("config", format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

fn dedup_log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".dedup.log");
    PathBuf::from(s)
}

fn ingest_to(
    input: &Path,
    adapter: &str,
    threshold: Option<f64>,
    dedup: Option<DedupScope>,
    out: &Path,
) -> Result<Dataset> {
    let spec = resolve_adapter(adapter).map_err(at("ingest"))?;
    let opts = IngestOptions {
        binarize_threshold: threshold,
        dedup,
        source: String::new(),
    };
    let result = ingest(input, &spec, &opts).map_err(at("ingest"))?;
    for w in &result.warnings {
        note(format!("warning: {w}"));
    }
    write_dataset(out, &result.dataset).map_err(at("ingest"))?;
    write_jsonl(&dedup_log_path(out), &result.removals).map_err(at("ingest"))?;
    note(format!(
        "ingested {} instances ({:.1}% metaphoric), removed {} duplicates -> {}",
        result.dataset.len(),
        result.dataset.metaphoric_percent().unwrap_or(0.0),
        result.removals.len(),
        out.display()
    ));
    Ok(result.dataset)
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let dedup = parse_dedup(&a.dedup, "ingest")?;
    ingest_to(&a.input, &a.adapter, a.binarize_threshold, dedup, &a.out).map(|_| ())
}

#[derive(Serialize)]
struct ValidationOutput {
    instances: usize,
    metaphoric_percent: Option<f64>,
    violations: Vec<figbias_core::corpus::Violation>,
    context_groups: Vec<Vec<String>>,
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let ds = read_dataset(&a.input).map_err(at("validate"))?;
    let report = validate(&ds);
    let out = ValidationOutput {
        instances: ds.len(),
        metaphoric_percent: ds.metaphoric_percent(),
        context_groups: detect_context_duplication(&ds),
        violations: report.violations,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(at("validate"))?);
    if out.violations.is_empty() {
        Ok(())
    } else {
        Err(StageError::new(
            "validate",
            format!("{} invariant violation(s)", out.violations.len()),
        ))
    }
}

fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let mode: Mode = a.mode.parse().map_err(at("ablate"))?;
    let ds = read_dataset(&a.input).map_err(at("ablate"))?;
    let examples = ablate_all(&ds.instances, mode).map_err(at("ablate"))?;
    write_jsonl(&a.out, &examples).map_err(at("ablate"))
}

fn parse_ratios(raw: &str) -> Result<Ratios> {
    let parts: Vec<f64> = parse_list(raw, "split")?;
    match parts.as_slice() {
        [train, dev, test] => Ok(Ratios {
            train: *train,
            dev: *dev,
            test: *test,
        }),
        _ => Err(StageError::new("split", format!("--ratios needs train,dev,test, got {raw:?}"))),
    }
}

fn make_plan(
    ds: &Dataset,
    scheme: &str,
    key: &str,
    seed: Option<u64>,
    opts: PlanOptions,
) -> Result<SplitPlan> {
    let need_seed = || {
        seed.ok_or_else(|| {
            StageError::new(
                "split",
                format!("scheme {scheme} needs a seed (--seed or {SEED_ENV})"),
            )
        })
    };
    let plan = match scheme {
        "original" => plan_original(ds),
        "random" => plan_random(ds, &PlanOptions { seed: need_seed()?, ..opts }),
        "lexical" => {
            let key: SplitKey = key.parse().map_err(at("split"))?;
            plan_lexical(ds, key, &PlanOptions { seed: need_seed()?, ..opts })
        }
        other => {
            return Err(StageError::new(
                "split",
                format!("unknown scheme {other:?} (expected original, random or lexical)"),
            ))
        }
    }
    .map_err(at("split"))?;
    for w in &plan.warnings {
        note(format!("warning: {}: {w}", ds.name));
    }
    Ok(plan)
}

fn cmd_split(a: &SplitArgs) -> Result<()> {
    let ds = read_dataset(&a.input).map_err(at("split"))?;
    let opts = PlanOptions {
        k: a.k,
        ratios: parse_ratios(&a.ratios)?,
        seed: 0,
        single_fold_threshold: (a.single_fold_threshold > 0).then_some(a.single_fold_threshold),
    };
    let plan = make_plan(&ds, &a.scheme, &a.key, seed_or_env(a.seed, None)?, opts)?;
    write_json(&a.out, &plan).map_err(at("split"))
}

fn audit_options(modes: &str, classifiers: &str, alpha_grid: Option<Vec<f64>>, bigrams: bool) -> Result<AuditOptions> {
    let modes: Vec<Mode> = parse_list(modes, "audit")?;
    let classifiers: Vec<Classifier> = parse_list(classifiers, "audit")?;
    if modes.is_empty() || classifiers.is_empty() {
        return Err(StageError::new("audit", "need at least one mode and one classifier"));
    }
    let mut opts = AuditOptions {
        modes,
        classifiers,
        alpha_grid,
        ..AuditOptions::default()
    };
    opts.nb.bigrams = bigrams;
    Ok(opts)
}

fn cmd_audit(a: &AuditArgs) -> Result<()> {
    let grid = match &a.alpha_grid {
        Some(raw) => Some(parse_list::<f64>(raw, "audit")?),
        None => None,
    };
    let opts = audit_options(&a.modes, &a.classifiers, grid, a.bigrams)?;
    let ds = read_dataset(&a.input).map_err(at("audit"))?;
    let plan: SplitPlan = read_json(&a.plan).map_err(at("audit"))?;
    let report = run_audit(&ds, &plan, &opts).map_err(at("audit"))?;
    write_json(&a.out, &ReportFile::new(vec![report])).map_err(at("audit"))
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let granularity: Granularity = a.granularity.parse().map_err(at("sample"))?;
    let seed = seed_or_env(a.seed, None)?
        .ok_or_else(|| StageError::new("sample", format!("sampling needs a seed (--seed or {SEED_ENV})")))?;
    let corpus = read_corpus(&a.input).map_err(at("sample"))?;
    let config = SamplerConfig {
        ratio: a.ratio,
        seed,
        max_per_expression: a.max_per_expression,
        granularity,
        dataset: a.dataset.clone(),
    };
    let (ds, log, stats) = sample_dataset(&corpus, &config).map_err(at("sample"))?;
    write_dataset(&a.out, &ds).map_err(at("sample"))?;
    #[derive(Serialize)]
    struct LogFile<'a> {
        stats: &'a figbias_core::sampler::AssemblyStats,
        provenance: &'a str,
        #[serde(flatten)]
        log: &'a figbias_core::sampler::SamplingLog,
    }
    write_json(
        &a.log,
        &LogFile {
            stats: &stats,
            provenance: &ds.provenance,
            log: &log,
        },
    )
    .map_err(at("sample"))?;
    note(&ds.provenance);
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let mut merged = ReportFile::new(Vec::new());
    for path in &a.input {
        merged.merge(read_report(path).map_err(at("report"))?);
    }
    let text = render(&merged, a.format).map_err(at("report"))?;
    match &a.out {
        Some(path) => write_text(path, &text).map_err(at("report")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let modes: Vec<Mode> = parse_list(&a.modes, "export")?;
    let ds = read_dataset(&a.input).map_err(at("export"))?;
    let plan: SplitPlan = read_json(&a.plan).map_err(at("export"))?;
    let manifest = export(&ds, &plan, &modes, &a.out).map_err(at("export"))?;
    note(format!("exported {} files -> {}", manifest.files.len(), a.out.display()));
    Ok(())
}

/// Overrides the config with whatever flags were given.
fn merged_config(a: &RunArgs) -> Result<AuditConfig> {
    let mut cfg = AuditConfig::load(&a.config).map_err(at("config"))?;
    let list = |s: &Option<String>| {
        s.as_ref()
            .map(|v| v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
    };
    cfg.out_dir = a.out_dir.clone().or(cfg.out_dir);
    cfg.k = a.k.or(cfg.k);
    cfg.key = a.key.clone().or(cfg.key);
    cfg.schemes = list(&a.schemes).or(cfg.schemes);
    cfg.modes = list(&a.modes).or(cfg.modes);
    cfg.classifiers = list(&a.classifiers).or(cfg.classifiers);
    cfg.single_fold_threshold = a.single_fold_threshold.or(cfg.single_fold_threshold);
    cfg.export |= a.export;
    cfg.seed = seed_or_env(a.seed, cfg.seed)?;
    Ok(cfg)
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let cfg = merged_config(a)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("figbias-out"));

    // Parse every stage's options before doing any work.
    let dedup = parse_dedup(cfg.dedup.as_deref().unwrap_or("exact_instance"), "ingest")?;
    let schemes: Vec<String> = cfg
        .schemes
        .clone()
        .unwrap_or_else(|| vec!["random".into(), "lexical".into()]);
    let mut seen = BTreeSet::new();
    for s in &schemes {
        if !["original", "random", "lexical"].contains(&s.as_str()) || !seen.insert(s) {
            return Err(StageError::new("split", format!("unknown or repeated scheme {s:?}")));
        }
    }
    let global_key = cfg.key.clone().unwrap_or_else(|| "surface".into());
    for key in std::iter::once(&global_key).chain(cfg.datasets.iter().filter_map(|d| d.key.as_ref())) {
        key.parse::<SplitKey>().map_err(at("split"))?;
    }
    let opts = audit_options(
        &cfg.modes.clone().map(|m| m.join(",")).unwrap_or_else(|| "default,only_pme,masked".into()),
        &cfg.classifiers
            .clone()
            .map(|c| c.join(","))
            .unwrap_or_else(|| "majority,memorizer,nb".into()),
        cfg.alpha_grid.clone(),
        false,
    )?;
    let plan_opts = PlanOptions {
        k: cfg.k.unwrap_or(5),
        ratios: Ratios::default(),
        seed: 0,
        single_fold_threshold: match cfg.single_fold_threshold {
            Some(0) => None,
            Some(t) => Some(t),
            None => Some(10_000),
        },
    };

    let mut reports: Vec<EvalReport> = Vec::new();
    for entry in &cfg.datasets {
        let stem = entry
            .name
            .clone()
            .or_else(|| entry.path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "dataset".into());
        let dir = out_dir.join(&stem);
        let canonical = dir.join("dataset.jsonl");
        let mut ds = match &entry.adapter {
            Some(adapter) => ingest_to(&entry.path, adapter, entry.binarize_threshold, dedup, &canonical)?,
            None => {
                let raw = read_dataset(&entry.path).map_err(at("ingest"))?;
                let report = validate(&raw);
                if let Some(v) = report.violations.first() {
                    return Err(StageError::new("ingest", format!("{}: {v}", entry.path.display())));
                }
                let (ds, removals) = match dedup {
                    Some(scope) => figbias_core::prep::deduplicate(&raw, scope),
                    None => (raw, Vec::new()),
                };
                write_dataset(&canonical, &ds).map_err(at("ingest"))?;
                write_jsonl(&dedup_log_path(&canonical), &removals).map_err(at("ingest"))?;
                ds
            }
        };
        if let Some(name) = &entry.name {
            ds.name = name.clone();
        }

        for mode in &opts.modes {
            let examples = ablate_all(&ds.instances, *mode).map_err(at("ablate"))?;
            write_jsonl(&dir.join("ablated").join(format!("{mode}.jsonl")), &examples)
                .map_err(at("ablate"))?;
        }

        let key = entry.key.as_deref().unwrap_or(&global_key);
        for scheme in &schemes {
            let plan = make_plan(&ds, scheme, key, cfg.seed, plan_opts)?;
            write_json(&dir.join(format!("{scheme}.plan.json")), &plan).map_err(at("split"))?;
            let report = run_audit(&ds, &plan, &opts).map_err(at("audit"))?;
            write_json(
                &dir.join(format!("{scheme}.report.json")),
                &ReportFile::new(vec![report.clone()]),
            )
            .map_err(at("audit"))?;
            if cfg.export {
                export(&ds, &plan, &opts.modes, &dir.join("export").join(scheme)).map_err(at("export"))?;
            }
            reports.push(report);
        }
    }

    let file = ReportFile::new(reports);
    write_json(&out_dir.join("report.json"), &file).map_err(at("report"))?;
    for (format, name) in [(ReportFormat::Markdown, "report.md"), (ReportFormat::Csv, "report.csv")] {
        let text = render(&file, format).map_err(at("report"))?;
        write_text(&out_dir.join(name), &text).map_err(at("report"))?;
    }
    note(format!("wrote {}", out_dir.join("report.json").display()));
    Ok(())
}
