//! Domain types shared by every module: prediction outputs, runs, aligned
//! run sets, metric descriptors, and the stability report.
//!
//! An [`AlignedRunSet`] is the unit of analysis: `S` prediction runs of the
//! same task, produced under different random seeds, joined with gold labels
//! by example id. Construction validates all structural invariants, so
//! downstream computations never re-check them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which payload variant an [`Output`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Label,
    Scalar,
    Tokens,
    Text,
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OutputKind::Label => "label",
            OutputKind::Scalar => "scalar",
            OutputKind::Tokens => "tokens",
            OutputKind::Text => "text",
        };
        f.write_str(s)
    }
}

/// A single model prediction (or gold answer) for one example.
///
/// Invariants: scalars are finite and token sequences are non-empty. The
/// checked constructors enforce both; ingestion only ever uses those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    /// Class label; integer categories are stored in canonical decimal form.
    Label(String),
    /// Finite real value for regression tasks.
    Scalar(f64),
    /// Per-token category labels for sequence labeling; never empty.
    Tokens(Vec<String>),
    /// Whitespace-normalized, lowercased token list for free text.
    /// May be empty (an empty prediction string is legal).
    Text(Vec<String>),
}

impl Output {
    pub fn label(value: impl Into<String>) -> Self {
        Output::Label(value.into())
    }

    /// Rejects NaN and infinities.
    pub fn scalar(value: f64) -> Result<Self, ValidationError> {
        if value.is_finite() {
            Ok(Output::Scalar(value))
        } else {
            Err(ValidationError::NonFiniteScalar { value: value.to_string() })
        }
    }

    /// Rejects empty sequences.
    pub fn tokens(tokens: Vec<String>) -> Result<Self, ValidationError> {
        if tokens.is_empty() {
            Err(ValidationError::EmptyTokenSequence)
        } else {
            Ok(Output::Tokens(tokens))
        }
    }

    /// Normalizes raw text: lowercase, split on Unicode whitespace.
    pub fn text(raw: &str) -> Self {
        Output::Text(normalize_text(raw))
    }

    pub fn kind(&self) -> OutputKind {
        match self {
            Output::Label(_) => OutputKind::Label,
            Output::Scalar(_) => OutputKind::Scalar,
            Output::Tokens(_) => OutputKind::Tokens,
            Output::Text(_) => OutputKind::Text,
        }
    }
}

/// Deterministic text normalization: lowercase, split on Unicode whitespace.
pub fn normalize_text(raw: &str) -> Vec<String> {
    raw.to_lowercase().split_whitespace().map(str::to_owned).collect()
}

/// One prediction keyed by an opaque example id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub output: Output,
}

/// The task family of an [`AlignedRunSet`]; fixes the [`Output`] variant
/// every run and the gold map must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
    SequenceLabeling,
    TextGeneration,
    Qa,
}

impl TaskKind {
    pub fn required_output(self) -> OutputKind {
        match self {
            TaskKind::Classification => OutputKind::Label,
            TaskKind::Regression => OutputKind::Scalar,
            TaskKind::SequenceLabeling => OutputKind::Tokens,
            TaskKind::TextGeneration | TaskKind::Qa => OutputKind::Text,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
            TaskKind::SequenceLabeling => "sequence_labeling",
            TaskKind::TextGeneration => "text_generation",
            TaskKind::Qa => "qa",
        };
        f.write_str(s)
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classification" => Ok(TaskKind::Classification),
            "regression" => Ok(TaskKind::Regression),
            "sequence_labeling" => Ok(TaskKind::SequenceLabeling),
            "text_generation" => Ok(TaskKind::TextGeneration),
            "qa" => Ok(TaskKind::Qa),
            other => Err(format!("unknown task kind {other:?}")),
        }
    }
}

/// Whether larger metric values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// The standard evaluation metrics this crate computes per seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Precision,
    Recall,
    F1,
    Mcc,
    Mae,
    Mse,
    Pearson,
    Spearman,
    ExactMatch,
    TokenF1,
}

impl MetricKind {
    pub const ALL: [MetricKind; 11] = [
        MetricKind::Accuracy,
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::F1,
        MetricKind::Mcc,
        MetricKind::Mae,
        MetricKind::Mse,
        MetricKind::Pearson,
        MetricKind::Spearman,
        MetricKind::ExactMatch,
        MetricKind::TokenF1,
    ];

    /// Error metrics (MAE, MSE) are lower-better; everything else is
    /// higher-better.
    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::Mae | MetricKind::Mse => Orientation::LowerBetter,
            _ => Orientation::HigherBetter,
        }
    }

    /// Whether per-seed values of this metric are reported on the percent
    /// scale (x100). Error metrics stay in their own units.
    pub fn percent_scaled(self) -> bool {
        self.orientation() == Orientation::HigherBetter
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::F1 => "f1",
            MetricKind::Mcc => "mcc",
            MetricKind::Mae => "mae",
            MetricKind::Mse => "mse",
            MetricKind::Pearson => "pearson",
            MetricKind::Spearman => "spearman",
            MetricKind::ExactMatch => "exact_match",
            MetricKind::TokenF1 => "token_f1",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Which per-example agreement scoring function a report was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// 1 iff the two predictions (and, for the correct variant, the gold
    /// label) coincide exactly.
    Indicator,
    /// Mean per-token indicator over an aligned token sequence.
    TokenMean,
    /// A per-example metric value, e.g. absolute error or token-overlap F1.
    MetricBased(MetricKind),
}

impl ScorerKind {
    /// True when pair/correct scores live in [0, 1] and percent-render
    /// cleanly; false for raw-unit error metrics.
    pub fn fraction_valued(self) -> bool {
        match self {
            ScorerKind::Indicator | ScorerKind::TokenMean => true,
            ScorerKind::MetricBased(kind) => kind.orientation() == Orientation::HigherBetter,
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerKind::Indicator => f.write_str("indicator"),
            ScorerKind::TokenMean => f.write_str("token_mean"),
            ScorerKind::MetricBased(kind) => write!(f, "metric:{kind}"),
        }
    }
}

/// One model's predictions for one task under one seed.
///
/// Record order is preserved as loaded; it carries no meaning downstream
/// because all joins go through example ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    seed: i64,
    task: String,
    records: Vec<PredictionRecord>,
}

impl Run {
    /// Validates the per-run invariants: at least one record, non-empty and
    /// unique example ids, a single output variant throughout.
    pub fn new(
        seed: i64,
        task: impl Into<String>,
        records: Vec<PredictionRecord>,
    ) -> Result<Self, ValidationError> {
        if records.is_empty() {
            return Err(ValidationError::EmptyRun { seed });
        }
        let kind = records[0].output.kind();
        let mut seen = std::collections::BTreeSet::new();
        for record in &records {
            if record.example_id.is_empty() {
                return Err(ValidationError::EmptyId { seed });
            }
            if record.output.kind() != kind {
                return Err(ValidationError::VariantMismatch {
                    context: format!("run with seed {seed}"),
                    expected: kind,
                    found: record.output.kind(),
                });
            }
            if !seen.insert(record.example_id.as_str()) {
                return Err(ValidationError::DuplicateId {
                    context: format!("run with seed {seed}"),
                    id: record.example_id.clone(),
                });
            }
        }
        Ok(Run { seed, task: task.into(), records })
    }

    pub fn seed(&self) -> i64 {
        self.seed
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn output_kind(&self) -> OutputKind {
        self.records[0].output.kind()
    }

    /// Records keyed and ordered by example id.
    pub fn by_id(&self) -> BTreeMap<&str, &Output> {
        self.records.iter().map(|r| (r.example_id.as_str(), &r.output)).collect()
    }

    fn sort_records(&mut self) {
        self.records.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    }
}

/// `S` runs plus gold labels, joined by example id: the unit of stability
/// analysis. Immutable after validation; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedRunSet {
    task_kind: TaskKind,
    runs: Vec<Run>,
    gold: BTreeMap<String, Output>,
    train_size: Option<u64>,
}

impl AlignedRunSet {
    /// Validates and canonicalizes a candidate run set.
    ///
    /// Canonical form sorts runs by seed and records by example id, so two
    /// sets built from arbitrarily shuffled inputs compare equal. Validation
    /// of an already-valid set is therefore idempotent.
    pub fn new(
        task_kind: TaskKind,
        mut runs: Vec<Run>,
        gold: BTreeMap<String, Output>,
        train_size: Option<u64>,
    ) -> Result<Self, ValidationError> {
        if runs.is_empty() {
            return Err(ValidationError::EmptyRunSet { what: "no runs" });
        }
        if gold.is_empty() {
            return Err(ValidationError::EmptyRunSet { what: "gold label set is empty" });
        }
        let required = task_kind.required_output();
        for (id, output) in &gold {
            if id.is_empty() {
                return Err(ValidationError::EmptyId { seed: i64::MIN });
            }
            if output.kind() != required {
                return Err(ValidationError::VariantMismatch {
                    context: "gold labels".to_owned(),
                    expected: required,
                    found: output.kind(),
                });
            }
        }
        let mut seeds = std::collections::BTreeSet::new();
        for run in &mut runs {
            if !seeds.insert(run.seed) {
                return Err(ValidationError::DuplicateSeed { seed: run.seed });
            }
            if run.output_kind() != required {
                return Err(ValidationError::VariantMismatch {
                    context: format!("run with seed {}", run.seed),
                    expected: required,
                    found: run.output_kind(),
                });
            }
            run.sort_records();
            // Equal-length sorted unique sequences are equal sets iff they
            // match pointwise; report the first discrepancy.
            for record in &run.records {
                if !gold.contains_key(&record.example_id) {
                    return Err(ValidationError::UnexpectedId {
                        seed: run.seed,
                        id: record.example_id.clone(),
                    });
                }
            }
            if run.records.len() != gold.len() {
                let covered: std::collections::BTreeSet<&str> =
                    run.records.iter().map(|r| r.example_id.as_str()).collect();
                let missing = gold
                    .keys()
                    .find(|id| !covered.contains(id.as_str()))
                    .expect("run shorter than gold must miss some id");
                return Err(ValidationError::MissingId {
                    seed: run.seed,
                    id: missing.clone(),
                });
            }
        }
        runs.sort_by_key(Run::seed);
        Ok(AlignedRunSet { task_kind, runs, gold, train_size })
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    /// Runs in ascending seed order, each with records sorted by id.
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn gold(&self) -> &BTreeMap<String, Output> {
        &self.gold
    }

    pub fn n_examples(&self) -> usize {
        self.gold.len()
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn seeds(&self) -> Vec<i64> {
        self.runs.iter().map(Run::seed).collect()
    }

    pub fn train_size(&self) -> Option<u64> {
        self.train_size
    }

    /// Decomposes the set back into its parts (used to test idempotence).
    pub fn into_parts(self) -> (TaskKind, Vec<Run>, BTreeMap<String, Output>, Option<u64>) {
        (self.task_kind, self.runs, self.gold, self.train_size)
    }
}

/// Validates an aligned run set; alias for [`AlignedRunSet::new`] on an
/// already-assembled candidate.
pub fn validate_run_set(candidate: AlignedRunSet) -> Result<AlignedRunSet, ValidationError> {
    let (kind, runs, gold, train_size) = candidate.into_parts();
    AlignedRunSet::new(kind, runs, gold, train_size)
}

/// Consistency values for one unordered pair of seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConsistency {
    pub seed_a: i64,
    pub seed_b: i64,
    /// Mean pairwise agreement score over all examples.
    pub con: f64,
    /// Mean agreement-with-gold score over all examples.
    pub ccon: f64,
}

/// Full output of a stability analysis for one task.
///
/// Unit conventions: for higher-better metrics, `zeta_per_seed`, `zeta_mean`
/// and `var` are on the percent scale (x100); for error metrics they stay in
/// raw units. Pair `con`/`ccon` values are fractions in [0, 1] for
/// indicator/token-mean scorers and metric units otherwise; rendering
/// converts fractions to percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub task: String,
    pub metric: MetricKind,
    pub scorer: ScorerKind,
    /// Per-seed metric value, keyed by seed, ascending.
    pub zeta_per_seed: BTreeMap<i64, f64>,
    pub zeta_mean: f64,
    /// Population standard deviation of the per-seed metric values.
    pub var: f64,
    /// One entry per unordered seed pair, ascending (seed_a < seed_b).
    pub pairs: Vec<PairConsistency>,
    pub con_mean: f64,
    pub ccon_mean: f64,
}

impl StabilityReport {
    pub fn n_seeds(&self) -> usize {
        self.zeta_per_seed.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// Structural violations detected while building domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("empty run set: {what}")]
    EmptyRunSet { what: &'static str },
    #[error("run with seed {seed} has no records")]
    EmptyRun { seed: i64 },
    #[error("empty example id in run with seed {seed}")]
    EmptyId { seed: i64 },
    #[error("duplicate example id {id:?} in {context}")]
    DuplicateId { context: String, id: String },
    #[error("duplicate seed {seed} in run set")]
    DuplicateSeed { seed: i64 },
    #[error("run with seed {seed} does not cover gold id {id:?}")]
    MissingId { seed: i64, id: String },
    #[error("run with seed {seed} contains id {id:?} that is absent from gold")]
    UnexpectedId { seed: i64, id: String },
    #[error("{context}: expected {expected} outputs, found {found}")]
    VariantMismatch { context: String, expected: OutputKind, found: OutputKind },
    #[error("non-finite scalar {value:?} rejected")]
    NonFiniteScalar { value: String },
    #[error("empty token sequence rejected")]
    EmptyTokenSequence,
}

impl ValidationError {
    /// Stable machine-readable name, printed by the CLI next to the message.
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::EmptyRunSet { .. } => "EmptyRunSet",
            ValidationError::EmptyRun { .. } => "EmptyRun",
            ValidationError::EmptyId { .. } => "EmptyId",
            ValidationError::DuplicateId { .. } => "DuplicateId",
            ValidationError::DuplicateSeed { .. } => "DuplicateSeed",
            ValidationError::MissingId { .. } => "MissingId",
            ValidationError::UnexpectedId { .. } => "UnexpectedId",
            ValidationError::VariantMismatch { .. } => "VariantMismatch",
            ValidationError::NonFiniteScalar { .. } => "NonFiniteScalar",
            ValidationError::EmptyTokenSequence => "EmptyTokenSequence",
        }
    }
}
