//! Cross-task analyses over stability reports: training-size correlations,
//! per-task heatmap normalization, and relational report validation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metrics::{self, MetricError};
use crate::model::{MetricKind, ScorerKind, StabilityReport};

/// How training sizes are transformed before correlating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeTransform {
    Raw,
    Log10,
}

impl SizeTransform {
    pub fn apply(self, size: u64) -> f64 {
        match self {
            SizeTransform::Raw => size as f64,
            SizeTransform::Log10 => (size as f64).log10(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeTransform::Raw => "raw",
            SizeTransform::Log10 => "log10",
        }
    }
}

impl std::str::FromStr for SizeTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(SizeTransform::Raw),
            "log10" => Ok(SizeTransform::Log10),
            other => Err(format!("unknown size transform {other:?}")),
        }
    }
}

/// Pearson correlations between (transformed) training size and each
/// stability summary statistic, across tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSummary {
    pub r_var: f64,
    pub r_con: f64,
    pub r_ccon: f64,
    pub size_transform: SizeTransform,
    /// Task names in ascending training-size order (ties broken by name).
    pub tasks_included: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no training size for task {task:?}")]
    MissingSize { task: String },
    #[error("training size for task {task:?} must be positive")]
    InvalidSize { task: String },
    #[error("correlation needs at least 3 tasks, got {got}")]
    TooFewTasks { got: usize },
    #[error("task {task:?} appears in more than one report")]
    DuplicateTask { task: String },
    #[error("zero variance: correlation is undefined for a constant column")]
    ZeroVariance,
    #[error("heatmap row {row} has {len} entries; need at least 2")]
    RowTooShort { row: usize, len: usize },
    #[error("reports disagree on the seed set: {detail}")]
    SeedSetMismatch { detail: String },
    #[error("report validation supports indicator and token_mean scorers, not {kind}")]
    UnsupportedScorerKind { kind: ScorerKind },
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::MissingSize { .. } => "MissingSize",
            AnalysisError::InvalidSize { .. } => "InvalidSize",
            AnalysisError::TooFewTasks { .. } => "TooFewTasks",
            AnalysisError::DuplicateTask { .. } => "DuplicateTask",
            AnalysisError::ZeroVariance => "ZeroVariance",
            AnalysisError::RowTooShort { .. } => "RowTooShort",
            AnalysisError::SeedSetMismatch { .. } => "SeedSetMismatch",
            AnalysisError::UnsupportedScorerKind { .. } => "UnsupportedScorerKind",
        }
    }
}

/// One row of the plot-ready correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub task: String,
    pub size: u64,
    pub var: f64,
    pub con_mean: f64,
    pub ccon_mean: f64,
}

/// Joins reports with training sizes, sorted ascending by size.
pub fn size_table(
    reports: &[StabilityReport],
    sizes: &BTreeMap<String, u64>,
) -> Result<Vec<SizeRow>, AnalysisError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::with_capacity(reports.len());
    for report in reports {
        if !seen.insert(report.task.as_str()) {
            return Err(AnalysisError::DuplicateTask { task: report.task.clone() });
        }
        let size = *sizes
            .get(&report.task)
            .ok_or_else(|| AnalysisError::MissingSize { task: report.task.clone() })?;
        if size == 0 {
            return Err(AnalysisError::InvalidSize { task: report.task.clone() });
        }
        rows.push(SizeRow {
            task: report.task.clone(),
            size,
            var: report.var,
            con_mean: report.con_mean,
            ccon_mean: report.ccon_mean,
        });
    }
    rows.sort_by(|a, b| a.size.cmp(&b.size).then_with(|| a.task.cmp(&b.task)));
    Ok(rows)
}

/// Pearson correlation of transformed training size against VAR, CON and
/// CCON across tasks.
pub fn size_correlations(
    reports: &[StabilityReport],
    sizes: &BTreeMap<String, u64>,
    transform: SizeTransform,
) -> Result<CorrelationSummary, AnalysisError> {
    let rows = size_table(reports, sizes)?;
    if rows.len() < 3 {
        return Err(AnalysisError::TooFewTasks { got: rows.len() });
    }
    let xs: Vec<f64> = rows.iter().map(|r| transform.apply(r.size)).collect();
    let correlate = |ys: Vec<f64>| -> Result<f64, AnalysisError> {
        metrics::pearson(&xs, &ys).map_err(|e| match e {
            MetricError::ZeroVariance => AnalysisError::ZeroVariance,
            other => unreachable!("pearson on equal-length task columns: {other}"),
        })
    };
    Ok(CorrelationSummary {
        r_var: correlate(rows.iter().map(|r| r.var).collect())?,
        r_con: correlate(rows.iter().map(|r| r.con_mean).collect())?,
        r_ccon: correlate(rows.iter().map(|r| r.ccon_mean).collect())?,
        size_transform: transform,
        tasks_included: rows.into_iter().map(|r| r.task).collect(),
    })
}

/// Per-row min-max normalization into [0, 1]; a constant row maps to 0.5
/// everywhere so it stays renderable.
pub fn normalize_heatmap(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    rows.iter()
        .enumerate()
        .map(|(idx, row)| {
            if row.len() < 2 {
                return Err(AnalysisError::RowTooShort { row: idx, len: row.len() });
            }
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                Ok(vec![0.5; row.len()])
            } else {
                Ok(row.iter().map(|v| (v - min) / (max - min)).collect())
            }
        })
        .collect()
}

/// Slack for relational checks; floating-point accumulation noise must not
/// flag a mathematically valid report.
const RELATION_TOLERANCE: f64 = 1e-12;

/// Checks the relational invariants a consistency report must satisfy.
///
/// Applies to indicator and token-mean reports. Mean-level relations
/// (`ccon_mean <= con_mean <= 1`, `var >= 0`) are always checked; the
/// per-pair bounds against per-seed accuracy apply only when the report's
/// metric is accuracy under the indicator scorer, where the per-seed values
/// are the accuracies those bounds refer to.
pub fn validate_report(report: &StabilityReport) -> Result<Vec<String>, AnalysisError> {
    match report.scorer {
        ScorerKind::Indicator | ScorerKind::TokenMean => {}
        kind => return Err(AnalysisError::UnsupportedScorerKind { kind }),
    }
    let mut violations = Vec::new();
    if report.ccon_mean > report.con_mean + RELATION_TOLERANCE {
        violations.push(format!(
            "ccon_mean {} exceeds con_mean {}",
            report.ccon_mean, report.con_mean
        ));
    }
    if report.con_mean > 1.0 + RELATION_TOLERANCE {
        violations.push(format!("con_mean {} exceeds 1", report.con_mean));
    }
    if report.var < -RELATION_TOLERANCE {
        violations.push(format!("var {} is negative", report.var));
    }
    let acc_bounds =
        report.scorer == ScorerKind::Indicator && report.metric == MetricKind::Accuracy;
    for pair in &report.pairs {
        let name = format!("pair ({}, {})", pair.seed_a, pair.seed_b);
        if pair.ccon > pair.con + RELATION_TOLERANCE {
            violations.push(format!("{name}: ccon {} exceeds con {}", pair.ccon, pair.con));
        }
        if pair.con > 1.0 + RELATION_TOLERANCE {
            violations.push(format!("{name}: con {} exceeds 1", pair.con));
        }
        if pair.con < -RELATION_TOLERANCE || pair.ccon < -RELATION_TOLERANCE {
            violations.push(format!("{name}: negative consistency value"));
        }
        if acc_bounds {
            let acc = |seed: i64| report.zeta_per_seed.get(&seed).map(|z| z / 100.0);
            if let (Some(acc_a), Some(acc_b)) = (acc(pair.seed_a), acc(pair.seed_b)) {
                if pair.ccon > acc_a.min(acc_b) + RELATION_TOLERANCE {
                    violations.push(format!(
                        "{name}: ccon {} exceeds min accuracy {}",
                        pair.ccon,
                        acc_a.min(acc_b)
                    ));
                }
                if pair.con + RELATION_TOLERANCE < (acc_a + acc_b - 1.0).max(0.0) {
                    violations.push(format!(
                        "{name}: con {} is below the accuracy overlap bound {}",
                        pair.con,
                        (acc_a + acc_b - 1.0).max(0.0)
                    ));
                }
            }
        }
    }
    Ok(violations)
}
