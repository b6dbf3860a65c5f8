//! Macro and micro stability of predictions across random seeds.
//!
//! The macro side summarizes a standard metric over `S` seeds with its
//! population standard deviation ([`var`]). The micro side scores how often
//! individual predictions agree between seed pairs: consistency (CON) is the
//! mean per-example agreement of two runs, correct-consistency (CCON)
//! additionally requires agreement with the gold label. Aggregation averages
//! both over all S·(S-1)/2 unordered seed pairs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metrics::{self, MetricError};
use crate::model::{
    AlignedRunSet, MetricKind, Output, OutputKind, PairConsistency, Run, ScorerKind,
    StabilityReport,
};
use crate::numeric::{compensated_mean, compensated_sum, NeumaierSum};

/// Output scale for [`var`]: percent multiplies the fraction-scale result
/// by exactly 100.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarScale {
    Fraction,
    Percent,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("empty input")]
    EmptyInput,
    #[error("token sequences differ in length within one example{}: {len_a} vs {len_b}",
            id.as_deref().map(|i| format!(" ({i:?})")).unwrap_or_default())]
    TokenLengthMismatch { id: Option<String>, len_a: usize, len_b: usize },
    #[error("runs are not aligned: {detail}")]
    MisalignedRuns { detail: String },
    #[error("no gold label for example id {id:?}")]
    MissingGold { id: String },
    #[error("stability analysis needs at least two runs, got {got}")]
    NeedAtLeastTwoRuns { got: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

impl StabilityError {
    pub fn code(&self) -> &'static str {
        match self {
            StabilityError::EmptyInput => "EmptyInput",
            StabilityError::TokenLengthMismatch { .. } => "TokenLengthMismatch",
            StabilityError::MisalignedRuns { .. } => "MisalignedRuns",
            StabilityError::MissingGold { .. } => "MissingGold",
            StabilityError::NeedAtLeastTwoRuns { .. } => "NeedAtLeastTwoRuns",
            StabilityError::Metric(e) => e.code(),
        }
    }
}

/// Population standard deviation of a metric series, in the requested scale.
///
/// Percent output is defined as exactly `100 x` the fraction-scale result,
/// so the two scales never drift apart in the last bits. A constant series
/// (including a single value) yields exactly zero.
pub fn var(values: &[f64], scale: VarScale) -> Result<f64, StabilityError> {
    if values.is_empty() {
        return Err(StabilityError::EmptyInput);
    }
    let spread = if values.windows(2).all(|w| w[0] == w[1]) {
        0.0
    } else {
        let mean = compensated_mean(values.iter().copied());
        let mean_sq = compensated_mean(values.iter().map(|v| (v - mean) * (v - mean)));
        mean_sq.sqrt()
    };
    Ok(match scale {
        VarScale::Fraction => spread,
        VarScale::Percent => 100.0 * spread,
    })
}

/// Per-example agreement scoring function: a pairwise score for two
/// predictions and a correctness-aware score that also sees the gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementScorer {
    kind: ScorerKind,
}

impl AgreementScorer {
    /// Exact-match indicator for classification outputs.
    pub fn indicator() -> Self {
        AgreementScorer { kind: ScorerKind::Indicator }
    }

    /// Mean per-token indicator for sequence-labeling outputs.
    pub fn token_mean() -> Self {
        AgreementScorer { kind: ScorerKind::TokenMean }
    }

    /// Metric-valued scorer: the pair score is `metric(a, b)` and the
    /// correct score averages `metric(a, r)` and `metric(b, r)`.
    ///
    /// Only metrics defined on a single example pair qualify: MAE, MSE,
    /// exact match and token F1. Corpus-level metrics (accuracy, MCC,
    /// Pearson, ...) are rejected.
    pub fn metric(kind: MetricKind) -> Result<Self, StabilityError> {
        match kind {
            MetricKind::Mae | MetricKind::Mse | MetricKind::ExactMatch | MetricKind::TokenF1 => {
                Ok(AgreementScorer { kind: ScorerKind::MetricBased(kind) })
            }
            other => Err(MetricError::UnsupportedKindForVariant {
                kind: other,
                to: "a single example pair".to_owned(),
            }
            .into()),
        }
    }

    /// Reconstructs a scorer from its serialized kind.
    pub fn from_kind(kind: ScorerKind) -> Result<Self, StabilityError> {
        match kind {
            ScorerKind::Indicator => Ok(Self::indicator()),
            ScorerKind::TokenMean => Ok(Self::token_mean()),
            ScorerKind::MetricBased(metric) => Self::metric(metric),
        }
    }

    pub fn kind(&self) -> ScorerKind {
        self.kind
    }

    /// The output variant this scorer applies to.
    pub fn supports(&self, variant: OutputKind) -> bool {
        match self.kind {
            ScorerKind::Indicator => variant == OutputKind::Label,
            ScorerKind::TokenMean => variant == OutputKind::Tokens,
            ScorerKind::MetricBased(MetricKind::Mae | MetricKind::Mse) => {
                variant == OutputKind::Scalar
            }
            ScorerKind::MetricBased(_) => variant == OutputKind::Text,
        }
    }

    /// Agreement between two predictions for one example.
    pub fn pair_score(&self, a: &Output, b: &Output) -> Result<f64, StabilityError> {
        match (self.kind, a, b) {
            (ScorerKind::Indicator, Output::Label(a), Output::Label(b)) => {
                Ok(if a == b { 1.0 } else { 0.0 })
            }
            (ScorerKind::TokenMean, Output::Tokens(a), Output::Tokens(b)) => {
                token_indicator_mean(&[a, b])
            }
            (ScorerKind::MetricBased(kind), a, b) => metric_pair(kind, a, b),
            (_, a, _) => Err(self.variant_error(a)),
        }
    }

    /// Agreement between two predictions and the gold answer.
    pub fn correct_score(&self, a: &Output, b: &Output, gold: &Output) -> Result<f64, StabilityError> {
        match (self.kind, a, b, gold) {
            (ScorerKind::Indicator, Output::Label(a), Output::Label(b), Output::Label(r)) => {
                Ok(if a == b && b == r { 1.0 } else { 0.0 })
            }
            (ScorerKind::TokenMean, Output::Tokens(a), Output::Tokens(b), Output::Tokens(r)) => {
                token_indicator_mean(&[a, b, r])
            }
            (ScorerKind::MetricBased(kind), a, b, r) => {
                Ok((metric_pair(kind, a, r)? + metric_pair(kind, b, r)?) / 2.0)
            }
            (_, a, _, _) => Err(self.variant_error(a)),
        }
    }

    fn variant_error(&self, got: &Output) -> StabilityError {
        MetricError::VariantMismatch {
            expected: match self.kind {
                ScorerKind::Indicator => OutputKind::Label,
                ScorerKind::TokenMean => OutputKind::Tokens,
                ScorerKind::MetricBased(MetricKind::Mae | MetricKind::Mse) => OutputKind::Scalar,
                ScorerKind::MetricBased(_) => OutputKind::Text,
            },
            found: got.kind(),
        }
        .into()
    }
}

/// Fraction of positions where all sequences carry the same token; all
/// sequences must share one length.
fn token_indicator_mean(seqs: &[&Vec<String>]) -> Result<f64, StabilityError> {
    let len = seqs[0].len();
    for seq in &seqs[1..] {
        if seq.len() != len {
            return Err(StabilityError::TokenLengthMismatch {
                id: None,
                len_a: len,
                len_b: seq.len(),
            });
        }
    }
    let matches = (0..len)
        .filter(|&t| seqs[1..].iter().all(|seq| seq[t] == seqs[0][t]))
        .count();
    Ok(matches as f64 / len as f64)
}

fn metric_pair(kind: MetricKind, a: &Output, b: &Output) -> Result<f64, StabilityError> {
    match (kind, a, b) {
        (MetricKind::Mae, Output::Scalar(a), Output::Scalar(b)) => Ok((a - b).abs()),
        (MetricKind::Mse, Output::Scalar(a), Output::Scalar(b)) => Ok((a - b) * (a - b)),
        (MetricKind::ExactMatch, Output::Text(a), Output::Text(b)) => Ok(metrics::exact_match(a, b)),
        (MetricKind::TokenF1, Output::Text(a), Output::Text(b)) => Ok(metrics::token_f1(a, b)),
        (kind, a, _) => Err(MetricError::UnsupportedKindForVariant {
            kind,
            to: format!("{} outputs", a.kind()),
        }
        .into()),
    }
}

fn attach_id(err: StabilityError, id: &str) -> StabilityError {
    match err {
        StabilityError::TokenLengthMismatch { id: None, len_a, len_b } => {
            StabilityError::TokenLengthMismatch { id: Some(id.to_owned()), len_a, len_b }
        }
        other => other,
    }
}

fn joined<'a>(
    run_a: &'a Run,
    run_b: &'a Run,
) -> Result<Vec<(&'a str, &'a Output, &'a Output)>, StabilityError> {
    if run_a.records().len() != run_b.records().len() {
        return Err(StabilityError::MisalignedRuns {
            detail: format!(
                "seed {} has {} records, seed {} has {}",
                run_a.seed(),
                run_a.records().len(),
                run_b.seed(),
                run_b.records().len()
            ),
        });
    }
    let by_id = run_b.by_id();
    run_a
        .records()
        .iter()
        .map(|record| {
            let id = record.example_id.as_str();
            by_id
                .get(id)
                .map(|b| (id, &record.output, *b))
                .ok_or_else(|| StabilityError::MisalignedRuns {
                    detail: format!(
                        "id {id:?} from seed {} is absent from seed {}",
                        run_a.seed(),
                        run_b.seed()
                    ),
                })
        })
        .collect()
}

/// Mean pairwise agreement (CON) of two runs over their shared id set.
pub fn pair_consistency(
    run_a: &Run,
    run_b: &Run,
    scorer: &AgreementScorer,
) -> Result<f64, StabilityError> {
    let mut acc = NeumaierSum::new();
    for (id, a, b) in joined(run_a, run_b)? {
        acc.add(scorer.pair_score(a, b).map_err(|e| attach_id(e, id))?);
    }
    Ok(acc.mean())
}

/// Mean agreement-with-gold (CCON) of two runs over their shared id set.
pub fn pair_correct_consistency(
    run_a: &Run,
    run_b: &Run,
    gold: &BTreeMap<String, Output>,
    scorer: &AgreementScorer,
) -> Result<f64, StabilityError> {
    let mut acc = NeumaierSum::new();
    for (id, a, b) in joined(run_a, run_b)? {
        let r = gold.get(id).ok_or_else(|| StabilityError::MissingGold { id: id.to_owned() })?;
        acc.add(scorer.correct_score(a, b, r).map_err(|e| attach_id(e, id))?);
    }
    Ok(acc.mean())
}

/// Runs the full stability analysis over an aligned run set.
///
/// Per-seed metric values come from [`metrics::evaluate_metric`] against the
/// gold labels; their population standard deviation is reported on the
/// percent scale for higher-better metrics and in raw units otherwise.
/// CON/CCON are computed for every unordered seed pair, ascending, and
/// averaged without weighting.
pub fn aggregate_stability(
    set: &AlignedRunSet,
    metric: MetricKind,
    scorer: &AgreementScorer,
) -> Result<StabilityReport, StabilityError> {
    if set.n_runs() < 2 {
        return Err(StabilityError::NeedAtLeastTwoRuns { got: set.n_runs() });
    }
    let variant = set.task_kind().required_output();
    if !scorer.supports(variant) {
        return Err(MetricError::UnsupportedKindForVariant {
            kind: match scorer.kind() {
                ScorerKind::MetricBased(kind) => kind,
                _ => MetricKind::Accuracy,
            },
            to: format!("{variant} outputs under scorer {}", scorer.kind()),
        }
        .into());
    }

    // Records are sorted by id, so each run's outputs line up with the gold
    // map's iteration order.
    let gold_outputs: Vec<Output> = set.gold().values().cloned().collect();
    let percent = metric.percent_scaled();

    let mut zeta_raw = Vec::with_capacity(set.n_runs());
    let mut zeta_per_seed = BTreeMap::new();
    for run in set.runs() {
        let preds: Vec<Output> = run.records().iter().map(|r| r.output.clone()).collect();
        let zeta = metrics::evaluate_metric(metric, &preds, &gold_outputs)?;
        zeta_raw.push(zeta);
        zeta_per_seed.insert(run.seed(), if percent { 100.0 * zeta } else { zeta });
    }
    let zeta_mean = compensated_mean(zeta_per_seed.values().copied());
    let spread = var(&zeta_raw, if percent { VarScale::Percent } else { VarScale::Fraction })?;

    // Validation sorted every run's records by id over exactly the gold id
    // set, so equal indices refer to the same example and no per-pair join
    // is needed. This is the same computation as pair_consistency /
    // pair_correct_consistency over sorted runs (unit-tested equal).
    let runs = set.runs();
    let mut pairs = Vec::with_capacity(runs.len() * (runs.len() - 1) / 2);
    for i in 0..runs.len() {
        for j in (i + 1)..runs.len() {
            let records_a = runs[i].records();
            let records_b = runs[j].records();
            let mut con_acc = NeumaierSum::new();
            let mut ccon_acc = NeumaierSum::new();
            for t in 0..records_a.len() {
                let id = records_a[t].example_id.as_str();
                let a = &records_a[t].output;
                let b = &records_b[t].output;
                con_acc.add(scorer.pair_score(a, b).map_err(|e| attach_id(e, id))?);
                ccon_acc.add(
                    scorer
                        .correct_score(a, b, &gold_outputs[t])
                        .map_err(|e| attach_id(e, id))?,
                );
            }
            pairs.push(PairConsistency {
                seed_a: runs[i].seed(),
                seed_b: runs[j].seed(),
                con: con_acc.mean(),
                ccon: ccon_acc.mean(),
            });
        }
    }
    let con_mean = compensated_sum(pairs.iter().map(|p| p.con)) / pairs.len() as f64;
    let ccon_mean = compensated_sum(pairs.iter().map(|p| p.ccon)) / pairs.len() as f64;

    Ok(StabilityReport {
        task: runs[0].task().to_owned(),
        metric,
        scorer: scorer.kind(),
        zeta_per_seed,
        zeta_mean,
        var: spread,
        pairs,
        con_mean,
        ccon_mean,
    })
}
