use figbias::emit::{csv_text, markdown, parse_csv, render, ReportFormat};
use figbias_core::ablation::Mode;
use figbias_core::baselines::{run_audit, AuditOptions};
use figbias_core::corpus::{Dataset, Instance, Label, Span};
use figbias_core::report::{Gap, ReportFile};
use figbias_core::split::{plan_random, PlanOptions};

fn report() -> ReportFile {
    let instances = (0..40)
        .map(|i| {
            let label = if i % 4 == 0 { Label::Literal } else { Label::Metaphoric };
            Instance::new(
                format!("i{i:02}"),
                "toy",
                vec![format!("c{}", i % 5), format!("e{}", i % 8), "x".into()],
                vec![Span::new(1, 2)],
                label,
            )
        })
        .collect();
    let ds = Dataset::new("toy", instances);
    let plan = plan_random(&ds, &PlanOptions { seed: 9, ..PlanOptions::default() }).unwrap();
    ReportFile::new(vec![run_audit(&ds, &plan, &AuditOptions::default()).unwrap()])
}

#[test]
fn markdown_has_maj_then_three_mode_columns() {
    let md = markdown(&report());
    let header = md.lines().find(|l| l.contains("| Maj |")).unwrap();
    let cols: Vec<&str> = header.split('|').map(str::trim).filter(|c| !c.is_empty()).collect();
    assert_eq!(&cols[3..], ["Maj", "Default", "PME", "Masked"]);
    let nb = md.lines().find(|l| l.starts_with("| toy | random, 5 folds | nb |")).unwrap();
    assert_eq!(nb.matches('%').count(), 2, "{nb}");
}

#[test]
fn undefined_gap_renders_as_n_a() {
    let mut file = report();
    let r = &mut file.reports[0];
    for row in r.averaged.iter_mut().filter(|a| a.classifier == "nb" && a.mode == Mode::Default) {
        row.metrics.macro_f1 = 0.0;
    }
    r.gaps = vec![Gap {
        mode: Mode::Masked,
        classifier: "nb".into(),
        macro_f1_gap: None,
    }];
    let md = markdown(&file);
    let nb = md.lines().find(|l| l.starts_with("| toy | random, 5 folds | nb |")).unwrap();
    assert!(nb.contains("n/a"), "{nb}");
}

#[test]
fn csv_round_trips_exactly() {
    let file = report();
    let rows = parse_csv(&csv_text(&file).unwrap()).unwrap();
    let r = &file.reports[0];
    assert_eq!(rows.len(), r.averaged.len());
    for (row, avg) in rows.iter().zip(&r.averaged) {
        assert_eq!(row.classifier, avg.classifier);
        assert_eq!(row.mode, avg.mode);
        assert_eq!(row.macro_f1.to_bits(), avg.metrics.macro_f1.to_bits());
        assert_eq!(row.f1_lit.to_bits(), avg.metrics.literal.f1.to_bits());
        assert_eq!(row.majority_accuracy.to_bits(), avg.majority_accuracy.to_bits());
        assert_eq!(row.macro_f1_gap, r.gap(&avg.classifier, avg.mode));
    }
}

#[test]
fn json_output_is_a_mergeable_report_file() {
    let file = report();
    let text = render(&file, ReportFormat::Json).unwrap();
    let mut parsed: ReportFile = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, file);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema_version"], 1);
    parsed.merge(file.clone());
    assert_eq!(parsed.reports.len(), 2);
}

#[test]
fn external_classifier_rows_render_next_to_baselines() {
    // A trainer outside this workspace only has to emit the same schema.
    let mut file = report();
    let mut external = file.reports[0].clone();
    for row in &mut external.averaged {
        row.classifier = "encoder".into();
    }
    external.cells.clear();
    for g in &mut external.gaps {
        g.classifier = "encoder".into();
    }
    file.merge(ReportFile::new(vec![external]));
    let md = markdown(&file);
    assert!(md.contains("| toy | random, 5 folds | encoder |"));
}
