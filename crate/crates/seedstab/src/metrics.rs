//! Standard evaluation metric kernels.
//!
//! All kernels accumulate in double precision with compensated summation.
//! Degenerate denominators follow the usual evaluation-harness conventions:
//! 0/0 precision and recall are 0, an MCC with a zero factor is 0.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{MetricKind, Output, OutputKind};
use crate::numeric::{compensated_mean, compensated_sum};

/// Binary confusion counts against one positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    /// Tallies predictions against gold with `positive` as the positive
    /// class; everything else counts as negative.
    pub fn binary(preds: &[&str], gold: &[&str], positive: &str) -> Self {
        let mut counts = ConfusionCounts::default();
        for (p, g) in preds.iter().zip(gold) {
            match (*p == positive, *g == positive) {
                (true, true) => counts.true_pos += 1,
                (true, false) => counts.false_pos += 1,
                (false, true) => counts.false_neg += 1,
                (false, false) => counts.true_neg += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// Precision with the 0/0 -> 0 convention.
    pub fn precision(&self) -> f64 {
        ratio_or_zero(self.true_pos, self.true_pos + self.false_pos)
    }

    /// Recall with the 0/0 -> 0 convention.
    pub fn recall(&self) -> f64 {
        ratio_or_zero(self.true_pos, self.true_pos + self.false_neg)
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio_or_zero(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Averaging mode for precision/recall/F1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Averaging {
    /// One-vs-rest counts against the given positive class.
    Binary { positive: String },
    /// Unweighted mean of one-vs-rest scores over the sorted label universe.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} predictions vs {right} gold values (need at least {min})")]
    LengthMismatch { left: usize, right: usize, min: usize },
    #[error("variant mismatch: expected {expected} outputs, found {found}")]
    VariantMismatch { expected: OutputKind, found: OutputKind },
    #[error("MCC needs binary labels; found {count} distinct labels")]
    NonBinaryLabels { count: usize },
    #[error("zero variance: correlation is undefined for a constant input")]
    ZeroVariance,
    #[error("empty input")]
    EmptyInput,
    #[error("metric {kind} is not applicable to {to}")]
    UnsupportedKindForVariant { kind: MetricKind, to: String },
}

impl MetricError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricError::LengthMismatch { .. } => "LengthMismatch",
            MetricError::VariantMismatch { .. } => "VariantMismatch",
            MetricError::NonBinaryLabels { .. } => "NonBinaryLabels",
            MetricError::ZeroVariance => "ZeroVariance",
            MetricError::EmptyInput => "EmptyInput",
            MetricError::UnsupportedKindForVariant { .. } => "UnsupportedKindForVariant",
        }
    }
}

fn check_lengths(left: usize, right: usize, min: usize) -> Result<(), MetricError> {
    if left != right || left < min {
        Err(MetricError::LengthMismatch { left, right, min })
    } else {
        Ok(())
    }
}

/// Fraction of positions where the prediction equals gold exactly.
pub fn accuracy(preds: &[Output], gold: &[Output]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    let mut matches = 0u64;
    for (p, g) in preds.iter().zip(gold) {
        if p.kind() != g.kind() {
            return Err(MetricError::VariantMismatch { expected: g.kind(), found: p.kind() });
        }
        if p == g {
            matches += 1;
        }
    }
    Ok(matches as f64 / preds.len() as f64)
}

fn as_labels<'a>(outputs: &'a [Output]) -> Result<Vec<&'a str>, MetricError> {
    outputs
        .iter()
        .map(|o| match o {
            Output::Label(s) => Ok(s.as_str()),
            other => {
                Err(MetricError::VariantMismatch { expected: OutputKind::Label, found: other.kind() })
            }
        })
        .collect()
}

fn as_scalars(outputs: &[Output]) -> Result<Vec<f64>, MetricError> {
    outputs
        .iter()
        .map(|o| match o {
            Output::Scalar(v) => Ok(*v),
            other => {
                Err(MetricError::VariantMismatch { expected: OutputKind::Scalar, found: other.kind() })
            }
        })
        .collect()
}

fn as_texts<'a>(outputs: &'a [Output]) -> Result<Vec<&'a [String]>, MetricError> {
    outputs
        .iter()
        .map(|o| match o {
            Output::Text(tokens) => Ok(tokens.as_slice()),
            other => {
                Err(MetricError::VariantMismatch { expected: OutputKind::Text, found: other.kind() })
            }
        })
        .collect()
}

/// Precision, recall and F1 for classification outputs.
pub fn precision_recall_f1(
    preds: &[Output],
    gold: &[Output],
    averaging: &Averaging,
) -> Result<(f64, f64, f64), MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    let preds = as_labels(preds)?;
    let gold = as_labels(gold)?;
    match averaging {
        Averaging::Binary { positive } => {
            let counts = ConfusionCounts::binary(&preds, &gold, positive);
            Ok((counts.precision(), counts.recall(), counts.f1()))
        }
        Averaging::Macro => {
            let mut classes: Vec<&str> = preds.iter().chain(gold.iter()).copied().collect();
            classes.sort_unstable();
            classes.dedup();
            let k = classes.len() as f64;
            let per_class: Vec<ConfusionCounts> =
                classes.iter().map(|c| ConfusionCounts::binary(&preds, &gold, c)).collect();
            let p = compensated_sum(per_class.iter().map(ConfusionCounts::precision)) / k;
            let r = compensated_sum(per_class.iter().map(ConfusionCounts::recall)) / k;
            let f1 = compensated_sum(per_class.iter().map(ConfusionCounts::f1)) / k;
            Ok((p, r, f1))
        }
    }
}

/// Matthews correlation coefficient for binary classification; 0 whenever a
/// denominator factor vanishes.
pub fn mcc(preds: &[Output], gold: &[Output]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    let preds = as_labels(preds)?;
    let gold = as_labels(gold)?;
    let mut classes: Vec<&str> = preds.iter().chain(gold.iter()).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() > 2 {
        return Err(MetricError::NonBinaryLabels { count: classes.len() });
    }
    // MCC is invariant under the choice of positive class.
    let counts = ConfusionCounts::binary(&preds, &gold, classes[0]);
    let (tp, fp, fneg, tn) = (
        counts.true_pos as f64,
        counts.false_pos as f64,
        counts.false_neg as f64,
        counts.true_neg as f64,
    );
    let factors = [tp + fp, tp + fneg, tn + fp, tn + fneg];
    if factors.iter().any(|&f| f == 0.0) {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fneg) / factors.iter().product::<f64>().sqrt())
}

/// Mean absolute error.
pub fn mae(preds: &[f64], gold: &[f64]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    Ok(compensated_mean(preds.iter().zip(gold).map(|(p, g)| (p - g).abs())))
}

/// Mean squared error.
pub fn mse(preds: &[f64], gold: &[f64]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    Ok(compensated_mean(preds.iter().zip(gold).map(|(p, g)| (p - g) * (p - g))))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    check_lengths(xs.len(), ys.len(), 2)?;
    let mx = compensated_mean(xs.iter().copied());
    let my = compensated_mean(ys.iter().copied());
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let syy = compensated_sum(ys.iter().map(|y| (y - my) * (y - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson over mean ranks (ties get the average
/// of the ranks they span).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    check_lengths(xs.len(), ys.len(), 2)?;
    pearson(&rank_with_ties(xs), &rank_with_ties(ys))
}

/// Mean (fractional) ranks, 1-based.
fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// 1 iff the two normalized token lists are identical (empty == empty).
pub fn exact_match(a: &[String], b: &[String]) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Token-overlap F1 over multiset intersection; 1 for two empty texts, 0
/// when exactly one side is empty.
pub fn token_f1(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for token in a {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0u64;
    for token in b {
        if let Some(remaining) = counts.get_mut(token.as_str()) {
            if *remaining > 0 {
                *remaining -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / a.len() as f64;
    let r = overlap as f64 / b.len() as f64;
    2.0 * p * r / (p + r)
}

/// Evaluates `kind` over aligned prediction/gold lists, dispatching to the
/// kernel that matches the output variant.
///
/// Precision/recall/F1 use macro averaging here; call
/// [`precision_recall_f1`] directly for the binary variant.
pub fn evaluate_metric(
    kind: MetricKind,
    preds: &[Output],
    gold: &[Output],
) -> Result<f64, MetricError> {
    check_lengths(preds.len(), gold.len(), 1)?;
    let variant = gold[0].kind();
    let unsupported = || MetricError::UnsupportedKindForVariant {
        kind,
        to: format!("{variant} outputs"),
    };
    match kind {
        MetricKind::Accuracy => {
            if variant == OutputKind::Scalar {
                return Err(unsupported());
            }
            accuracy(preds, gold)
        }
        MetricKind::Precision | MetricKind::Recall | MetricKind::F1 => {
            if variant != OutputKind::Label {
                return Err(unsupported());
            }
            let (p, r, f1) = precision_recall_f1(preds, gold, &Averaging::Macro)?;
            Ok(match kind {
                MetricKind::Precision => p,
                MetricKind::Recall => r,
                _ => f1,
            })
        }
        MetricKind::Mcc => {
            if variant != OutputKind::Label {
                return Err(unsupported());
            }
            mcc(preds, gold)
        }
        MetricKind::Mae | MetricKind::Mse | MetricKind::Pearson | MetricKind::Spearman => {
            if variant != OutputKind::Scalar {
                return Err(unsupported());
            }
            let p = as_scalars(preds)?;
            let g = as_scalars(gold)?;
            match kind {
                MetricKind::Mae => mae(&p, &g),
                MetricKind::Mse => mse(&p, &g),
                MetricKind::Pearson => pearson(&p, &g),
                _ => spearman(&p, &g),
            }
        }
        MetricKind::ExactMatch | MetricKind::TokenF1 => {
            if variant != OutputKind::Text {
                return Err(unsupported());
            }
            let p = as_texts(preds)?;
            let g = as_texts(gold)?;
            let per_example = p.iter().zip(&g).map(|(a, b)| {
                if kind == MetricKind::ExactMatch {
                    exact_match(a, b)
                } else {
                    token_f1(a, b)
                }
            });
            Ok(compensated_mean(per_example))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(values: &[&str]) -> Vec<Output> {
        values.iter().map(|v| Output::label(*v)).collect()
    }

    fn text(raw: &str) -> Vec<String> {
        crate::model::normalize_text(raw)
    }

    #[test]
    fn accuracy_examples() {
        let same = labels(&["a", "b", "c", "d"]);
        assert_eq!(accuracy(&same, &same).unwrap(), 1.0);

        let preds = labels(&["1", "0", "1"]);
        let gold = labels(&["1", "1", "1"]);
        assert!((accuracy(&preds, &gold).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let wrong = labels(&["x", "x", "x", "x", "x"]);
        let gold5 = labels(&["a", "b", "c", "d", "e"]);
        assert_eq!(accuracy(&wrong, &gold5).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_rejects_mismatched_inputs() {
        let preds = labels(&["1"]);
        let gold = labels(&["1", "0"]);
        assert_eq!(accuracy(&preds, &gold).unwrap_err().code(), "LengthMismatch");
        assert_eq!(accuracy(&[], &[]).unwrap_err().code(), "LengthMismatch");
        let scalars = vec![Output::scalar(1.0).unwrap()];
        assert_eq!(accuracy(&scalars, &labels(&["1"])).unwrap_err().code(), "VariantMismatch");
    }

    #[test]
    fn prf_examples() {
        let same = labels(&["1", "0", "1"]);
        let binary = Averaging::Binary { positive: "1".to_owned() };
        assert_eq!(precision_recall_f1(&same, &same, &binary).unwrap(), (1.0, 1.0, 1.0));

        let preds = labels(&["1", "1", "0"]);
        let gold = labels(&["1", "0", "1"]);
        assert_eq!(precision_recall_f1(&preds, &gold, &binary).unwrap(), (0.5, 0.5, 0.5));

        // No predicted positives: precision is 0 by convention, no error.
        let no_pos = labels(&["0", "0", "0"]);
        let (p, _, f1) = precision_recall_f1(&no_pos, &gold, &binary).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(f1, 0.0);
    }

    #[test]
    fn mcc_examples() {
        let gold = labels(&["1", "1", "0", "0"]);
        assert_eq!(mcc(&gold, &gold).unwrap(), 1.0);

        // tp = fp = fn = tn = 1 -> numerator 0.
        let preds = labels(&["1", "0", "1", "0"]);
        assert_eq!(mcc(&preds, &gold).unwrap(), 0.0);

        let constant = labels(&["1", "1", "1", "1"]);
        assert_eq!(mcc(&constant, &gold).unwrap(), 0.0);

        let three = labels(&["a", "b", "c"]);
        assert_eq!(mcc(&three, &three).unwrap_err().code(), "NonBinaryLabels");
    }

    #[test]
    fn mae_mse_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[2.0, 4.0], &[3.0, 3.0]).unwrap(), 1.0);
        assert_eq!(mse(&[2.0, 4.0], &[3.0, 3.0]).unwrap(), 1.0);
        assert_eq!(mae(&[5.0], &[2.0]).unwrap(), 3.0);
        assert_eq!(mse(&[5.0], &[2.0]).unwrap(), 9.0);
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0];
        let doubled = [2.0, 4.0, 6.0];
        assert!((pearson(&xs, &doubled).unwrap() - 1.0).abs() < 1e-12);
        let negated = [-1.0, -2.0, -3.0];
        assert!((pearson(&xs, &negated).unwrap() + 1.0).abs() < 1e-12);
        let ys = [1.0, 3.0, 2.0];
        assert!((pearson(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]).unwrap_err().code(), "ZeroVariance");
        assert_eq!(pearson(&[1.0], &[1.0]).unwrap_err().code(), "LengthMismatch");
    }

    #[test]
    fn spearman_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let monotone = [10.0, 20.0, 25.0, 90.0];
        assert!((spearman(&xs, &monotone).unwrap() - 1.0).abs() < 1e-12);
        let reversed = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&xs, &reversed).unwrap() + 1.0).abs() < 1e-12);
        let ys = [2.0, 1.0, 3.0];
        assert!((spearman(&[1.0, 2.0, 3.0], &ys).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_assigns_mean_rank_to_ties() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 10.0]), vec![1.5, 3.0, 1.5]);
    }

    #[test]
    fn exact_match_and_token_f1_examples() {
        assert_eq!(exact_match(&text("a b c"), &text("a b c")), 1.0);
        assert_eq!(token_f1(&text("a b c"), &text("a b c")), 1.0);
        assert_eq!(exact_match(&text("a b"), &text("b c")), 0.0);
        assert!((token_f1(&text("a b"), &text("b c")) - 0.5).abs() < 1e-15);
        assert_eq!(exact_match(&text(""), &text("x")), 0.0);
        assert_eq!(token_f1(&text(""), &text("x")), 0.0);
        assert_eq!(exact_match(&text(""), &text("")), 1.0);
        assert_eq!(token_f1(&text(""), &text("")), 1.0);
    }

    #[test]
    fn token_f1_respects_multiset_counts() {
        // "a a" vs "a": overlap 1, P = 1/2, R = 1 -> F1 = 2/3.
        let f1 = token_f1(&text("a a"), &text("a"));
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_metric_dispatch() {
        let same = labels(&["x", "y"]);
        assert_eq!(evaluate_metric(MetricKind::Accuracy, &same, &same).unwrap(), 1.0);

        let gold = labels(&["1", "1", "0", "0"]);
        let preds = labels(&["1", "0", "1", "0"]);
        assert_eq!(evaluate_metric(MetricKind::Mcc, &preds, &gold).unwrap(), 0.0);

        let scalars: Vec<Output> = [1.0, 2.0].iter().map(|v| Output::scalar(*v).unwrap()).collect();
        assert_eq!(evaluate_metric(MetricKind::Mae, &scalars, &scalars).unwrap(), 0.0);

        assert_eq!(
            evaluate_metric(MetricKind::Mae, &same, &same).unwrap_err().code(),
            "UnsupportedKindForVariant"
        );
        assert_eq!(
            evaluate_metric(MetricKind::Accuracy, &scalars, &scalars).unwrap_err().code(),
            "UnsupportedKindForVariant"
        );
    }

    #[test]
    fn binary_f1_equals_single_class_macro() {
        let preds = labels(&["1", "1", "0", "1", "0"]);
        let gold = labels(&["1", "0", "0", "1", "1"]);
        let binary = Averaging::Binary { positive: "1".to_owned() };
        let (p, r, f1) = precision_recall_f1(&preds, &gold, &binary).unwrap();
        let counts = ConfusionCounts::binary(
            &["1", "1", "0", "1", "0"],
            &["1", "0", "0", "1", "1"],
            "1",
        );
        assert_eq!((p, r, f1), (counts.precision(), counts.recall(), counts.f1()));
    }

    proptest! {
        #[test]
        fn accuracy_is_symmetric(values in proptest::collection::vec(0u8..4, 1..50)) {
            let a: Vec<Output> = values.iter().map(|v| Output::label(v.to_string())).collect();
            let b: Vec<Output> = values.iter().rev().map(|v| Output::label(v.to_string())).collect();
            prop_assert_eq!(accuracy(&a, &b).unwrap(), accuracy(&b, &a).unwrap());
        }

        #[test]
        fn mae_is_symmetric_and_nonnegative(
            xs in proptest::collection::vec(-100.0f64..100.0, 1..50),
            ys in proptest::collection::vec(-100.0f64..100.0, 1..50),
        ) {
            let n = xs.len().min(ys.len());
            let (xs, ys) = (&xs[..n], &ys[..n]);
            let forward = mae(xs, ys).unwrap();
            let backward = mae(ys, xs).unwrap();
            prop_assert!(forward >= 0.0);
            prop_assert!((forward - backward).abs() < 1e-12);
        }

        #[test]
        fn pearson_swap_symmetry_and_range(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..40),
            ys in proptest::collection::vec(-100.0f64..100.0, 3..40),
        ) {
            let n = xs.len().min(ys.len());
            let (xs, ys) = (&xs[..n], &ys[..n]);
            match (pearson(xs, ys), pearson(ys, xs)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((-1.0..=1.0).contains(&a));
                    prop_assert_eq!(a, b);
                }
                (Err(MetricError::ZeroVariance), Err(MetricError::ZeroVariance)) => {}
                (a, b) => prop_assert!(false, "asymmetric outcome: {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn mcc_negates_under_prediction_flip(
            values in proptest::collection::vec((0u8..2, 0u8..2), 2..60),
        ) {
            let preds: Vec<Output> = values.iter().map(|(p, _)| Output::label(p.to_string())).collect();
            let flipped: Vec<Output> =
                values.iter().map(|(p, _)| Output::label((1 - p).to_string())).collect();
            let gold: Vec<Output> = values.iter().map(|(_, g)| Output::label(g.to_string())).collect();
            let m = mcc(&preds, &gold).unwrap();
            let mf = mcc(&flipped, &gold).unwrap();
            prop_assert!((m + mf).abs() < 1e-12, "mcc {} vs flipped {}", m, mf);
        }

        #[test]
        fn token_f1_stays_in_unit_interval(
            a in proptest::collection::vec("[a-d]{1,3}", 0..8),
            b in proptest::collection::vec("[a-d]{1,3}", 0..8),
        ) {
            let f1 = token_f1(&a, &b);
            prop_assert!((0.0..=1.0).contains(&f1));
            prop_assert_eq!(f1, token_f1(&b, &a));
        }
    }
}
