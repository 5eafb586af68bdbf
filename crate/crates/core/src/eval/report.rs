use std::fmt::Write as _;
use std::path::Path;

use super::metrics::MetricsReport;
use crate::error::{Error, Result};

const HEADERS: [&str; 6] = [
    "Class",
    "Precision",
    "Recall",
    "F1-score",
    "False Positive Rate",
    "Total test samples",
];

/// Plain-text per-class table followed by the overall figures and the confusion matrix.
pub fn render_table(report: &MetricsReport) -> String {
    let name_w = report
        .classes
        .iter()
        .map(|c| c.name.len())
        .chain([HEADERS[0].len(), "macro avg".len()])
        .max()
        .unwrap_or(0);
    let mut s = String::new();
    let _ = write!(s, "{:<name_w$}", HEADERS[0]);
    for h in &HEADERS[1..] {
        let _ = write!(s, "  {h}");
    }
    s.push('\n');
    let row = |s: &mut String, name: &str, vals: [f64; 4], count: u64| {
        let _ = write!(s, "{name:<name_w$}");
        for (v, h) in vals.iter().zip(&HEADERS[1..5]) {
            let _ = write!(s, "  {v:>w$.2}", w = h.len());
        }
        let _ = writeln!(s, "  {count:>w$}", w = HEADERS[5].len());
    };
    for c in &report.classes {
        row(&mut s, &c.name, [c.precision, c.recall, c.f1, c.false_positive_rate], c.support);
    }
    row(
        &mut s,
        "macro avg",
        [
            report.macro_precision,
            report.macro_recall,
            report.macro_f1,
            report.overall_false_positive_rate,
        ],
        report.total,
    );
    let _ = writeln!(s, "\naccuracy {:.4} ({} samples)", report.accuracy, report.total);
    let _ = writeln!(
        s,
        "overall false positive rate {:.4} (macro average)",
        report.overall_false_positive_rate
    );

    s.push_str("\nconfusion (rows = true, cols = predicted)\n");
    let cell_w = report
        .confusion
        .counts
        .iter()
        .flatten()
        .map(|v| v.to_string().len())
        .chain(report.confusion.class_names.iter().map(String::len))
        .max()
        .unwrap_or(1);
    let _ = write!(s, "{:<name_w$}", "");
    for n in &report.confusion.class_names {
        let _ = write!(s, "  {n:>cell_w$}");
    }
    s.push('\n');
    for (n, r) in report.confusion.class_names.iter().zip(&report.confusion.counts) {
        let _ = write!(s, "{n:<name_w$}");
        for v in r {
            let _ = write!(s, "  {v:>cell_w$}");
        }
        s.push('\n');
    }
    s
}

/// Writes `<stem>.json` and `<stem>.txt`.
pub fn write_report(stem: &Path, report: &MetricsReport) -> Result<()> {
    let json = stem.with_extension("json");
    let text = stem.with_extension("txt");
    let mut body = serde_json::to_string_pretty(report).map_err(|e| Error::invalid(e.to_string()))?;
    body.push('\n');
    std::fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
    std::fs::write(&text, render_table(report)).map_err(|e| Error::io(&text, e))
}
