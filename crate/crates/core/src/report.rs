//! Report serialization: canonical JSON, a markdown summary and flat CSV
//! rows.

use std::fmt::Write as _;

use serde_json::Value;

use crate::model::{Dimension, HsbrReport, MetricId};
use crate::scoring::fmt_score;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The JSON schema reports are validated against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    CsvRow,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv-row" | "csv" => Ok(ReportFormat::CsvRow),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// The 40 CSV column names.
pub fn csv_header() -> Vec<String> {
    let mut cols = vec!["schema_version".to_string(), "repo_id".to_string()];
    cols.extend(MetricId::TOP_LEVEL.iter().map(|m| m.key().to_string()));
    cols.extend(MetricId::COMMUNITY.iter().map(|m| m.key().to_string()));
    cols.extend(Dimension::ALL.iter().map(|d| format!("R_{}", d.code())));
    cols.extend(["total", "level", "semantic_backend"].map(String::from));
    cols
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(cells).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells")
}

pub fn csv_header_line() -> String {
    csv_line(&csv_header())
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn csv_row(report: &HsbrReport) -> String {
    let mut cells = vec![
        report.provenance.schema_version.to_string(),
        report.repo_id.clone(),
    ];
    for m in MetricId::TOP_LEVEL.iter().chain(MetricId::COMMUNITY.iter()) {
        cells.push(report.vector.score(*m).map(num).unwrap_or_default());
    }
    for d in Dimension::ALL {
        cells.push(report.dimension_scores.get(&d).copied().map(num).unwrap_or_default());
    }
    cells.push(num(report.total));
    cells.push(report.risk_level.to_string());
    cells.push(report.provenance.semantic_backend.clone());
    csv_line(&cells)
}

/// JSON with object keys in sorted order, so that parsing and re-emitting
/// reproduces the same bytes.
pub fn canonical_json(report: &HsbrReport) -> String {
    let value: Value = serde_json::to_value(report).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

pub fn markdown(report: &HsbrReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# HSBR report: {}\n", report.repo_id);
    let _ = writeln!(
        out,
        "**Total:** {} ({})\n",
        fmt_score(report.total),
        report.risk_level
    );
    let _ = writeln!(out, "| Dimension | Score |\n|---|---|");
    for d in Dimension::ALL {
        if let Some(s) = report.dimension_scores.get(&d) {
            let _ = writeln!(out, "| {} ({}) | {} |", d.title(), d.code(), fmt_score(*s));
        }
    }
    out.push('\n');
    if report.explanations.is_empty() {
        out.push_str("No metric reached the high-risk threshold.\n");
    } else {
        out.push_str("## Findings\n\n");
        for e in &report.explanations {
            let _ = writeln!(out, "- {e}");
        }
    }
    if !report.notes.is_empty() {
        out.push_str("\n## Notes\n\n");
        for n in &report.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    let p = &report.provenance;
    let fetched = p
        .fetched_at
        .map(|t| crate::forge::timestamp::format(&t))
        .unwrap_or_else(|| "unknown".into());
    let _ = writeln!(
        out,
        "\n_Calibration {} · semantic backend {} · fetched {} · hsbr {}_",
        p.calibration_id, p.semantic_backend, fetched, p.tool_version
    );
    out
}

pub fn emit_report(report: &HsbrReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => canonical_json(report),
        ReportFormat::Markdown => markdown(report),
        ReportFormat::CsvRow => csv_row(report),
    }
    .into_bytes()
}
