//! Implementations of the CLI subcommands.
//!
//! Each command returns its stdout text and exit code so integration tests
//! can drive them through the binary and assert bytes exactly. Failures
//! carry a stable error code plus a human message; the binary prints
//! `error: <Code>: <message>` to stderr and exits nonzero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::analysis::{self, SizeTransform};
use crate::ingest;
use crate::model::StabilityReport;
use crate::report::{render_report, reports_from_json, summary_line, ReportFormat};
use crate::stability::{aggregate_stability, AgreementScorer};

/// Successful command outcome.
#[derive(Debug, PartialEq, Eq)]
pub struct CmdOutput {
    pub stdout: String,
    pub exit_code: u8,
}

impl CmdOutput {
    fn ok(stdout: String) -> Self {
        CmdOutput { stdout, exit_code: 0 }
    }
}

/// Command failure with a stable machine-readable code.
#[derive(Debug)]
pub struct CliFailure {
    pub code: &'static str,
    pub message: String,
}

impl CliFailure {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliFailure { code, message: message.into() }
    }
}

impl From<ingest::IngestError> for CliFailure {
    fn from(e: ingest::IngestError) -> Self {
        CliFailure::new(e.code(), e.to_string())
    }
}

impl From<crate::stability::StabilityError> for CliFailure {
    fn from(e: crate::stability::StabilityError) -> Self {
        CliFailure::new(e.code(), e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliFailure {
    fn from(e: analysis::AnalysisError) -> Self {
        CliFailure::new(e.code(), e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliFailure> {
    fs::read_to_string(path).map_err(|e| CliFailure::new("IoError", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliFailure> {
    fs::write(path, body).map_err(|e| CliFailure::new("IoError", format!("{}: {e}", path.display())))
}

fn load_reports(paths: &[&Path]) -> Result<Vec<StabilityReport>, CliFailure> {
    let mut reports = Vec::new();
    for path in paths {
        let text = read_file(path)?;
        let parsed = reports_from_json(&text).map_err(|e| {
            CliFailure::new("ParseError", format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })?;
        reports.extend(parsed);
    }
    Ok(reports)
}

/// Loads a `{"task": size, ...}` JSON map of positive training sizes.
fn load_sizes(path: &Path) -> Result<BTreeMap<String, u64>, CliFailure> {
    let text = read_file(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliFailure::new("ParseError", format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })?;
    let object = value.as_object().ok_or_else(|| {
        CliFailure::new("SchemaError", format!("{}: sizes file must be a JSON object", path.display()))
    })?;
    let mut sizes = BTreeMap::new();
    for (task, size) in object {
        let size = size.as_u64().filter(|&n| n > 0).ok_or_else(|| {
            CliFailure::new(
                "SchemaError",
                format!("{}: size for task {task:?} must be a positive integer", path.display()),
            )
        })?;
        sizes.insert(task.clone(), size);
    }
    Ok(sizes)
}

/// `eval`: run the full pipeline on one manifest and render the report.
pub fn cmd_eval(
    manifest_path: &Path,
    out_path: Option<&Path>,
    format: ReportFormat,
) -> Result<CmdOutput, CliFailure> {
    let (manifest, set) = ingest::assemble_from_manifest_path(manifest_path)?;
    let scorer = AgreementScorer::from_kind(manifest.scorer)?;
    let report = aggregate_stability(&set, manifest.metric, &scorer)?;
    let rendered = render_report(&report, format);
    let mut stdout = summary_line(&report);
    stdout.push('\n');
    match out_path {
        Some(path) => write_file(path, &rendered.body)?,
        None => stdout.push_str(&rendered.body),
    }
    Ok(CmdOutput::ok(stdout))
}

/// `correlate`: Pearson correlation of training size against VAR/CON/CCON
/// across task reports, plus a plot-ready CSV sorted by ascending size.
pub fn cmd_correlate(
    report_paths: &[&Path],
    sizes_path: &Path,
    transform: SizeTransform,
    out_path: Option<&Path>,
) -> Result<CmdOutput, CliFailure> {
    let reports = load_reports(report_paths)?;
    let sizes = load_sizes(sizes_path)?;
    let summary = analysis::size_correlations(&reports, &sizes, transform)?;
    let rows = analysis::size_table(&reports, &sizes)?;

    let mut csv = String::from("task,size,var,con,ccon\n");
    for row in &rows {
        let (con, ccon) = display_consistency_for(&reports, &row.task, row.con_mean, row.ccon_mean);
        writeln!(csv, "{},{},{},{con},{ccon}", row.task, row.size, row.var).expect("string write");
    }

    let mut stdout = format!(
        "r_var={:.4} r_con={:.4} r_ccon={:.4}\n",
        summary.r_var, summary.r_con, summary.r_ccon
    );
    match out_path {
        Some(path) => write_file(path, &csv)?,
        None => stdout.push_str(&csv),
    }
    Ok(CmdOutput::ok(stdout))
}

/// Consistency columns on the display scale of the task's scorer.
fn display_consistency_for(
    reports: &[StabilityReport],
    task: &str,
    con: f64,
    ccon: f64,
) -> (f64, f64) {
    let fraction = reports
        .iter()
        .find(|r| r.task == task)
        .map(|r| r.scorer.fraction_valued())
        .unwrap_or(true);
    if fraction {
        (100.0 * con, 100.0 * ccon)
    } else {
        (con, ccon)
    }
}

/// `heatmap`: per-task min-max normalized matrix of per-seed metric values.
pub fn cmd_heatmap(report_paths: &[&Path], out_path: &Path) -> Result<CmdOutput, CliFailure> {
    let mut reports = load_reports(report_paths)?;
    reports.sort_by(|a, b| a.task.cmp(&b.task));
    let mut seen = std::collections::BTreeSet::new();
    for report in &reports {
        if !seen.insert(report.task.clone()) {
            return Err(analysis::AnalysisError::DuplicateTask { task: report.task.clone() }.into());
        }
    }
    let reference: Vec<i64> = reports
        .first()
        .map(|r| r.zeta_per_seed.keys().copied().collect())
        .unwrap_or_default();
    for report in &reports {
        let seeds: Vec<i64> = report.zeta_per_seed.keys().copied().collect();
        if seeds != reference {
            return Err(analysis::AnalysisError::SeedSetMismatch {
                detail: format!(
                    "task {:?} has seeds {seeds:?}, expected {reference:?}",
                    report.task
                ),
            }
            .into());
        }
    }
    let matrix: Vec<Vec<f64>> =
        reports.iter().map(|r| r.zeta_per_seed.values().copied().collect()).collect();
    let normalized = analysis::normalize_heatmap(&matrix)?;

    let mut csv = String::new();
    for row in &normalized {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_file(out_path, &csv)?;

    let tasks: Vec<&str> = reports.iter().map(|r| r.task.as_str()).collect();
    let seeds: Vec<String> = reference.iter().map(i64::to_string).collect();
    let stdout = format!("rows: {}\ncols: {}\n", tasks.join(","), seeds.join(","));
    Ok(CmdOutput::ok(stdout))
}

/// `validate`: check the relational invariants of every report in a file.
pub fn cmd_validate(report_path: &Path) -> Result<CmdOutput, CliFailure> {
    let reports = load_reports(&[report_path])?;
    if reports.is_empty() {
        return Err(CliFailure::new("ParseError", format!("{}: no reports", report_path.display())));
    }
    let mut stdout = String::new();
    let mut violation_count = 0usize;
    for report in &reports {
        for violation in analysis::validate_report(report)? {
            violation_count += 1;
            writeln!(stdout, "{}: {violation}", report.task).expect("string write");
        }
    }
    if violation_count == 0 {
        Ok(CmdOutput::ok("OK\n".to_owned()))
    } else {
        Ok(CmdOutput { stdout, exit_code: 1 })
    }
}
