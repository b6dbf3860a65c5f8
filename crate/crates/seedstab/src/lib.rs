//! Quantify how sensitive a model's fine-tuning outcome is to random seeds,
//! given only per-seed prediction dumps.
//!
//! Two complementary views of seed sensitivity:
//!
//! * **Macro**: a standard metric (accuracy, MCC, MAE, ...) is evaluated per
//!   seed and summarized by its mean and population standard deviation
//!   ([`stability::var`]).
//! * **Micro**: consistency (CON) measures how often two runs make the same
//!   prediction on each test example, and correct-consistency (CCON) how
//!   often they agree *and* match the gold label; both are averaged over all
//!   unordered seed pairs ([`stability::aggregate_stability`]).
//!
//! Two runs can share the same accuracy while agreeing on far fewer
//! individual predictions, so macro stability alone can mask churn; the
//! micro metrics make that visible.
//!
//! ```
//! use std::collections::BTreeMap;
//! use seedstab::model::{AlignedRunSet, MetricKind, Output, PredictionRecord, Run, TaskKind};
//! use seedstab::stability::{aggregate_stability, AgreementScorer};
//!
//! let gold: BTreeMap<String, Output> =
//!     [("e1", "yes"), ("e2", "no")].iter().map(|(id, l)| ((*id).into(), Output::label(*l))).collect();
//! let run = |seed, labels: [&str; 2]| {
//!     Run::new(seed, "demo", vec![
//!         PredictionRecord { example_id: "e1".into(), output: Output::label(labels[0]) },
//!         PredictionRecord { example_id: "e2".into(), output: Output::label(labels[1]) },
//!     ]).unwrap()
//! };
//! let set = AlignedRunSet::new(
//!     TaskKind::Classification,
//!     vec![run(42, ["yes", "no"]), run(52, ["yes", "yes"])],
//!     gold,
//!     None,
//! ).unwrap();
//! let report =
//!     aggregate_stability(&set, MetricKind::Accuracy, &AgreementScorer::indicator()).unwrap();
//! assert_eq!(report.pairs.len(), 1);
//! assert_eq!(report.con_mean, 0.5);
//! ```

pub mod analysis;
pub mod cli;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod report;
pub mod stability;

mod numeric;

pub use model::{
    AlignedRunSet, MetricKind, Orientation, Output, OutputKind, PairConsistency, PredictionRecord,
    Run, ScorerKind, StabilityReport, TaskKind, ValidationError,
};
pub use stability::{aggregate_stability, AgreementScorer, StabilityError, VarScale};
