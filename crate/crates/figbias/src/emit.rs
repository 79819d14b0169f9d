//! Report rendering: markdown tables, flat CSV and versioned JSON.
//!
//! Numbers are rounded to one decimal only here. CSV keeps full precision
//! so it parses back to the exact averaged scores.

use std::fmt::Write as _;

use figbias_core::ablation::Mode;
use figbias_core::report::{AveragedRow, EvalReport, ReportFile};
use figbias_core::round1;
use figbias_core::split::Scheme;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

pub fn render(file: &ReportFile, format: ReportFormat) -> Result<String, String> {
    match format {
        ReportFormat::Markdown => Ok(markdown(file)),
        ReportFormat::Csv => csv_text(file),
        ReportFormat::Json => serde_json::to_string_pretty(file)
            .map(|s| s + "\n")
            .map_err(|e| e.to_string()),
    }
}

/// One decimal, never "-0.0".
pub fn fmt1(x: f64) -> String {
    let r = round1(x);
    format!("{:.1}", if r == 0.0 { 0.0 } else { r })
}

/// Signed percentage in brackets, or "n/a" when the gap is undefined.
pub fn fmt_gap(gap: Option<f64>) -> String {
    match gap {
        Some(g) => {
            let r = round1(g);
            if r > 0.0 {
                format!("(+{}%)", fmt1(r))
            } else {
                format!("({}%)", fmt1(r))
            }
        }
        None => "(n/a)".to_string(),
    }
}

fn scheme_label(r: &EvalReport) -> String {
    let name = match r.scheme {
        Scheme::Original => "original",
        Scheme::RandomKfold => "random",
        Scheme::LexicalKfold => "lexical",
    };
    let key = r.key.map(|k| format!(" on {k}")).unwrap_or_default();
    let folds = if r.folds == 1 { "1 fold".to_string() } else { format!("{} folds", r.folds) };
    format!("{name}{key}, {folds}")
}

/// Classifiers in first-seen order.
fn classifiers(r: &EvalReport) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for row in &r.averaged {
        if !out.contains(&row.classifier.as_str()) {
            out.push(&row.classifier);
        }
    }
    out
}

fn row<'a>(r: &'a EvalReport, classifier: &str, mode: Mode) -> Option<&'a AveragedRow> {
    r.averaged
        .iter()
        .find(|a| a.classifier == classifier && a.mode == mode)
}

/// Macro-F1 table with columns Maj | Default | PME | Masked, gaps in
/// brackets after the baseline cells, then a per-mode detail table.
pub fn markdown(file: &ReportFile) -> String {
    let mut s = String::new();
    s.push_str("## Macro-F1\n\n");
    s.push_str("| Dataset | Split | Classifier | Maj | Default | PME | Masked |\n");
    s.push_str("|---|---|---|---:|---:|---:|---:|\n");
    for r in &file.reports {
        for c in classifiers(r) {
            let maj = Mode::ALL
                .iter()
                .find_map(|&m| row(r, c, m))
                .map(|a| fmt1(a.majority_accuracy))
                .unwrap_or_else(|| "-".into());
            let cell = |mode: Mode| match row(r, c, mode) {
                None => "-".to_string(),
                Some(a) if mode == Mode::Default => fmt1(a.metrics.macro_f1),
                Some(a) => format!("{} {}", fmt1(a.metrics.macro_f1), fmt_gap(r.gap(c, mode))),
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.dataset,
                scheme_label(r),
                c,
                maj,
                cell(Mode::Default),
                cell(Mode::OnlyPme),
                cell(Mode::Masked)
            );
        }
    }

    s.push_str("\n## Accuracy and metaphor-class scores\n\n");
    s.push_str("| Dataset | Split | Classifier | Mode | Maj | Acc | P | R | F1 | Macro-F1 |\n");
    s.push_str("|---|---|---|---|---:|---:|---:|---:|---:|---:|\n");
    for r in &file.reports {
        for a in &r.averaged {
            let m = &a.metrics;
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.dataset,
                scheme_label(r),
                a.classifier,
                a.mode,
                fmt1(a.majority_accuracy),
                fmt1(m.accuracy),
                fmt1(m.metaphoric.precision),
                fmt1(m.metaphoric.recall),
                fmt1(m.metaphoric.f1),
                fmt1(m.macro_f1)
            );
        }
    }

    let warnings: Vec<String> = file
        .reports
        .iter()
        .flat_map(|r| r.warnings.iter().map(move |w| format!("- {}: {w}", r.dataset)))
        .collect();
    if !warnings.is_empty() {
        s.push_str("\n## Warnings\n\n");
        for w in warnings {
            s.push_str(&w);
            s.push('\n');
        }
    }
    s
}

/// One averaged row per CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub dataset: String,
    pub scheme: Scheme,
    pub key: Option<String>,
    pub folds: usize,
    pub classifier: String,
    pub mode: Mode,
    pub majority_accuracy: f64,
    pub accuracy: f64,
    pub precision_met: f64,
    pub recall_met: f64,
    pub f1_met: f64,
    pub precision_lit: f64,
    pub recall_lit: f64,
    pub f1_lit: f64,
    pub macro_f1: f64,
    pub macro_f1_gap: Option<f64>,
}

pub fn csv_rows(file: &ReportFile) -> Vec<CsvRow> {
    let mut out = Vec::new();
    for r in &file.reports {
        for a in &r.averaged {
            let m = &a.metrics;
            out.push(CsvRow {
                dataset: r.dataset.clone(),
                scheme: r.scheme,
                key: r.key.map(|k| k.to_string()),
                folds: a.folds,
                classifier: a.classifier.clone(),
                mode: a.mode,
                majority_accuracy: a.majority_accuracy,
                accuracy: m.accuracy,
                precision_met: m.metaphoric.precision,
                recall_met: m.metaphoric.recall,
                f1_met: m.metaphoric.f1,
                precision_lit: m.literal.precision,
                recall_lit: m.literal.recall,
                f1_lit: m.literal.f1,
                macro_f1: m.macro_f1,
                macro_f1_gap: r.gap(&a.classifier, a.mode),
            });
        }
    }
    out
}

pub fn csv_text(file: &ReportFile) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in csv_rows(file) {
        w.serialize(row).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_formatting() {
        assert_eq!(fmt_gap(Some(2.58)), "(+2.6%)");
        assert_eq!(fmt_gap(Some(-25.24)), "(-25.2%)");
        assert_eq!(fmt_gap(Some(-0.01)), "(0.0%)");
        assert_eq!(fmt_gap(None), "(n/a)");
        assert_eq!(fmt1(66.666), "66.7");
    }
}
