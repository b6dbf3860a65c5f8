//! Report rendering: markdown for humans, CSV and JSON for tooling.
//!
//! Markdown and the one-line summary express fraction-valued quantities as
//! percentages with two decimals; CSV and JSON carry the stored values at
//! full double precision so they round-trip losslessly.

use std::str::FromStr;

use crate::model::StabilityReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// A rendered report body together with the format it was rendered in.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub format: ReportFormat,
    pub body: String,
}

/// Consistency values on their display scale: fractions become percent,
/// raw-unit metrics pass through.
fn display_consistency(report: &StabilityReport, value: f64) -> f64 {
    if report.scorer.fraction_valued() {
        100.0 * value
    } else {
        value
    }
}

/// One-line summary: `task zeta_mean var con ccon`, two decimals each.
pub fn summary_line(report: &StabilityReport) -> String {
    format!(
        "{} {:.2} {:.2} {:.2} {:.2}",
        report.task,
        report.zeta_mean,
        report.var,
        display_consistency(report, report.con_mean),
        display_consistency(report, report.ccon_mean),
    )
}

pub fn render_report(report: &StabilityReport, format: ReportFormat) -> RenderedReport {
    let body = match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let mut body = serde_json::to_string_pretty(report).expect("report serializes");
            body.push('\n');
            body
        }
    };
    RenderedReport { format, body }
}

fn render_markdown(report: &StabilityReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Stability report: {}\n\n", report.task));
    out.push_str("| task | metric | scorer | mean (±VAR) | CON | CCON |\n");
    out.push_str("| --- | --- | --- | --- | --- | --- |\n");
    out.push_str(&format!(
        "| {} | {} | {} | {:.2} (±{:.2}) | {:.2} | {:.2} |\n",
        report.task,
        report.metric,
        report.scorer,
        report.zeta_mean,
        report.var,
        display_consistency(report, report.con_mean),
        display_consistency(report, report.ccon_mean),
    ));
    if !report.zeta_per_seed.is_empty() {
        out.push_str(&format!("\n## Per-seed {}\n\n", report.metric));
        out.push_str("| seed | value |\n| --- | --- |\n");
        for (seed, value) in &report.zeta_per_seed {
            out.push_str(&format!("| {seed} | {value:.2} |\n"));
        }
    }
    if !report.pairs.is_empty() {
        out.push_str("\n## Per-pair consistency\n\n");
        out.push_str("| seed_a | seed_b | CON | CCON |\n| --- | --- | --- | --- |\n");
        for pair in &report.pairs {
            out.push_str(&format!(
                "| {} | {} | {:.2} | {:.2} |\n",
                pair.seed_a,
                pair.seed_b,
                display_consistency(report, pair.con),
                display_consistency(report, pair.ccon),
            ));
        }
    }
    out
}

/// One row per seed plus one aggregate row; stored units, full precision.
fn render_csv(report: &StabilityReport) -> String {
    let mut out = String::from("task,metric,seed,zeta,var,con,ccon\n");
    for (seed, value) in &report.zeta_per_seed {
        out.push_str(&format!("{},{},{seed},{value},,,\n", report.task, report.metric));
    }
    out.push_str(&format!(
        "{},{},aggregate,{},{},{},{}\n",
        report.task, report.metric, report.zeta_mean, report.var, report.con_mean, report.ccon_mean
    ));
    out
}

/// Parses a JSON report document: either a single report object or an array
/// of reports.
pub fn reports_from_json(text: &str) -> Result<Vec<StabilityReport>, serde_json::Error> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text)
    } else {
        serde_json::from_str::<StabilityReport>(text).map(|r| vec![r])
    }
}
