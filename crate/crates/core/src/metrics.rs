//! Evaluation with access to ground truth.
//!
//! This is the only module that reads the hidden labels of the unlabeled
//! split. Learners and the selector never see them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Example, ExampleId};
use crate::learners::{BaseLearner, Query};
use crate::orchestrator::{Outcome, RoundRecord};
use crate::pseudo::PseudoLabeledSet;
use crate::scalar::Real;
use crate::selector::{majority_label, VoteMode};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("evaluation split is empty")]
    EmptyTest,
    #[error("harmonic mean requested but the {0} subset is empty")]
    EmptySubset(&'static str),
    #[error("example {0} has no hidden ground truth")]
    UnknownId(ExampleId),
    #[error("{found} predictions for {expected} examples")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall_accuracy: f64,
    pub base_accuracy: Option<f64>,
    pub novel_accuracy: Option<f64>,
    pub harmonic_mean: Option<f64>,
    /// `None` for classes absent from the split.
    pub per_class_accuracy: Vec<Option<f64>>,
}

/// `2ab / (a + b)`, zero when `a + b = 0`.
pub fn hm(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn ratio(correct: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| correct as f64 / total as f64)
}

/// Scores `predictions` against the labels of `test`.
///
/// With `require_hm` an empty base or novel subset is an error; otherwise the
/// harmonic mean is `None` when either subset is empty.
pub fn evaluate<T>(
    predictions: &[usize],
    test: &[Example<T>],
    base_classes: &BTreeSet<usize>,
    num_classes: usize,
    require_hm: bool,
) -> Result<EvalReport, MetricsError> {
    if test.is_empty() {
        return Err(MetricsError::EmptyTest);
    }
    if predictions.len() != test.len() {
        return Err(MetricsError::LengthMismatch {
            expected: test.len(),
            found: predictions.len(),
        });
    }
    let mut class_total = vec![0usize; num_classes];
    let mut class_correct = vec![0usize; num_classes];
    let (mut base, mut base_ok, mut novel, mut novel_ok) = (0, 0, 0, 0);
    for (ex, &pred) in test.iter().zip(predictions) {
        let Some(y) = ex.label else { continue };
        let hit = usize::from(pred == y);
        class_total[y] += 1;
        class_correct[y] += hit;
        if base_classes.contains(&y) {
            base += 1;
            base_ok += hit;
        } else {
            novel += 1;
            novel_ok += hit;
        }
    }
    let base_accuracy = ratio(base_ok, base);
    let novel_accuracy = ratio(novel_ok, novel);
    if require_hm {
        if base_accuracy.is_none() {
            return Err(MetricsError::EmptySubset("base"));
        }
        if novel_accuracy.is_none() {
            return Err(MetricsError::EmptySubset("novel"));
        }
    }
    Ok(EvalReport {
        overall_accuracy: ratio(base_ok + novel_ok, base + novel).unwrap_or(0.0),
        harmonic_mean: base_accuracy.zip(novel_accuracy).map(|(a, b)| hm(a, b)),
        base_accuracy,
        novel_accuracy,
        per_class_accuracy: class_correct
            .iter()
            .zip(&class_total)
            .map(|(&c, &n)| ratio(c, n))
            .collect(),
    })
}

/// Unique-argmax vote over all models; abstentions fall back to model 0.
pub fn ensemble_predict(model_predictions: &[Vec<usize>], num_classes: usize) -> Vec<usize> {
    let Some(first) = model_predictions.first() else {
        return Vec::new();
    };
    let mut votes = Vec::with_capacity(model_predictions.len());
    (0..first.len())
        .map(|i| {
            votes.clear();
            votes.extend(model_predictions.iter().map(|p| p[i]));
            majority_label(&votes, num_classes, VoteMode::Paper).unwrap_or(first[i])
        })
        .collect()
}

pub fn predict_split<T: Real>(
    learner: &dyn BaseLearner<T>,
    examples: &[Example<T>],
    round: u32,
) -> Vec<usize> {
    let queries: Vec<_> = examples.iter().map(|e| Query::original(e, round)).collect();
    learner.predict_batch(&queries)
}

/// Test-split report for one learner.
pub fn evaluate_model<T: Real>(
    learner: &dyn BaseLearner<T>,
    dataset: &Dataset<T>,
    round: u32,
) -> Result<EvalReport, MetricsError> {
    let preds = predict_split(learner, dataset.test(), round);
    evaluate(
        &preds,
        dataset.test(),
        dataset.base_classes(),
        dataset.num_classes(),
        false,
    )
}

/// Test-split report for the ensemble vote.
pub fn evaluate_ensemble<T: Real>(
    learners: &[&dyn BaseLearner<T>],
    dataset: &Dataset<T>,
    round: u32,
) -> Result<EvalReport, MetricsError> {
    let preds: Vec<Vec<usize>> = learners
        .iter()
        .map(|l| predict_split(*l, dataset.test(), round))
        .collect();
    let votes = ensemble_predict(&preds, dataset.num_classes());
    evaluate(
        &votes,
        dataset.test(),
        dataset.base_classes(),
        dataset.num_classes(),
        false,
    )
}

/// Number of entries whose label equals the hidden truth.
pub fn pseudo_label_correct<T>(
    set: &PseudoLabeledSet,
    dataset: &Dataset<T>,
) -> Result<usize, MetricsError> {
    set.iter().try_fold(0, |acc, (id, y)| {
        let truth = dataset
            .hidden_label(id)
            .ok_or(MetricsError::UnknownId(id))?;
        Ok(acc + usize::from(truth == y))
    })
}

/// Fraction of correct pseudo-labels, `None` for an empty set.
pub fn pseudo_label_accuracy<T>(
    set: &PseudoLabeledSet,
    dataset: &Dataset<T>,
) -> Result<Option<f64>, MetricsError> {
    let correct = pseudo_label_correct(set, dataset)?;
    Ok(ratio(correct, set.len()))
}

/// Accuracy of `predictions[i]` for unlabeled example `ids[i]`, `None` when empty.
pub fn hidden_accuracy<T>(
    ids: &[ExampleId],
    predictions: &[usize],
    dataset: &Dataset<T>,
) -> Result<Option<f64>, MetricsError> {
    if ids.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            expected: ids.len(),
            found: predictions.len(),
        });
    }
    let mut correct = 0;
    for (&id, &p) in ids.iter().zip(predictions) {
        let truth = dataset
            .hidden_label(id)
            .ok_or(MetricsError::UnknownId(id))?;
        correct += usize::from(truth == p);
    }
    Ok(ratio(correct, ids.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub class_counts: Vec<usize>,
    pub shares: Vec<f64>,
    pub max_share: f64,
    /// Natural log.
    pub entropy: f64,
    pub kl_to_uniform: f64,
}

/// Label distribution of a set. An empty set has zero shares and entropy.
pub fn distribution_stats(set: &PseudoLabeledSet, num_classes: usize) -> DistributionStats {
    distribution_from_counts(set.class_counts(num_classes))
}

pub fn distribution_from_counts(class_counts: Vec<usize>) -> DistributionStats {
    let total: usize = class_counts.iter().sum();
    let c = class_counts.len();
    if total == 0 {
        return DistributionStats {
            shares: vec![0.0; c],
            class_counts,
            max_share: 0.0,
            entropy: 0.0,
            kl_to_uniform: 0.0,
        };
    }
    let shares: Vec<f64> = class_counts
        .iter()
        .map(|&n| n as f64 / total as f64)
        .collect();
    let entropy = -shares
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| s * s.ln())
        .sum::<f64>();
    DistributionStats {
        max_share: shares.iter().copied().fold(0.0, f64::max),
        kl_to_uniform: ((c as f64).ln() - entropy).max(0.0),
        entropy,
        shares,
        class_counts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPair {
    pub round: u32,
    /// `e_t / e'` from the labeled-set estimates.
    pub estimated_ratio: f64,
    /// `(e_t / e')^(alpha t)`.
    pub estimated_power: f64,
    /// Pseudo-label error of this update over that of the previous one.
    pub true_ratio: Option<f64>,
}

/// Estimated against true error ratios for each update of model `j`.
///
/// The true error is measured on the accepted pseudo-labels. Before the
/// first update the previous true error is taken to be 0.5.
pub fn error_ratio_track(history: &[RoundRecord], j: usize, alpha: f64) -> Vec<RatioPair> {
    let mut prev_true = Some(0.5);
    let mut out = Vec::new();
    for rec in history {
        let Some(m) = rec.models.get(j) else { continue };
        if m.outcome != Outcome::Updated {
            continue;
        }
        let Some(est) = m.measured_error else {
            continue;
        };
        let estimated_ratio = est / m.prev_error;
        let cur_true = m.pseudo_label_accuracy.map(|a| 1.0 - a);
        let true_ratio = match (cur_true, prev_true) {
            (Some(c), Some(p)) if p > 0.0 => Some(c / p),
            _ => None,
        };
        out.push(RatioPair {
            round: rec.round,
            estimated_ratio,
            estimated_power: estimated_ratio.powf(alpha * rec.round as f64),
            true_ratio,
        });
        prev_true = cur_true;
    }
    out
}
