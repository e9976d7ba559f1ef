use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::vote::{check_predictions, majority_label, VoteMode};
use super::SelectError;
use crate::data::Example;
use crate::learners::{BaseLearner, Query};
use crate::scalar::Real;

/// Denominator of the measured error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// Only labeled examples with an accepted majority count.
    #[default]
    ExcludeNoConsensus,
    /// Examples without a majority count as errors.
    CountAsError,
}

/// Peer-majority error on the labeled set, kept as an exact fraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub wrong: u64,
    pub denominator: u64,
    pub consensus_count: u64,
    pub floor: Ratio<u64>,
    pub error_rate: Ratio<u64>,
    pub floor_applied: bool,
}

impl ErrorEstimate {
    pub fn rate_f64(&self) -> f64 {
        *self.error_rate.numer() as f64 / *self.error_rate.denom() as f64
    }
}

/// Error of the peer majority against the true labels `truth`.
///
/// The raw rate is clamped below by `1 / (2 |D_L|)`.
pub fn measure_error_from_predictions(
    truth: &[usize],
    peer_predictions: &[Vec<usize>],
    num_classes: usize,
    mode: VoteMode,
    policy: ErrorPolicy,
) -> Result<ErrorEstimate, SelectError> {
    if truth.is_empty() {
        return Err(SelectError::EmptyLabeledSet);
    }
    check_predictions(
        peer_predictions,
        peer_predictions.len(),
        truth.len(),
        num_classes,
    )?;
    let mut wrong = 0u64;
    let mut consensus = 0u64;
    let mut votes = Vec::with_capacity(peer_predictions.len());
    for (i, &y) in truth.iter().enumerate() {
        votes.clear();
        votes.extend(peer_predictions.iter().map(|p| p[i]));
        if let Some(label) = majority_label(&votes, num_classes, mode) {
            consensus += 1;
            if label != y {
                wrong += 1;
            }
        }
    }
    if consensus == 0 {
        return Err(SelectError::NoConsensus);
    }
    let n = truth.len() as u64;
    let (wrong, denominator) = match policy {
        ErrorPolicy::ExcludeNoConsensus => (wrong, consensus),
        ErrorPolicy::CountAsError => (wrong + n - consensus, n),
    };
    let floor = Ratio::new(1, 2 * n);
    let raw = Ratio::new(wrong, denominator);
    let floor_applied = raw < floor;
    Ok(ErrorEstimate {
        wrong,
        denominator,
        consensus_count: consensus,
        floor,
        error_rate: if floor_applied { floor } else { raw },
        floor_applied,
    })
}

/// Measures the peers' majority error on `labeled` at `round`.
pub fn measure_error<T: Real>(
    labeled: &[Example<T>],
    peers: &[&dyn BaseLearner<T>],
    round: u32,
    num_classes: usize,
    mode: VoteMode,
    policy: ErrorPolicy,
) -> Result<ErrorEstimate, SelectError> {
    let truth: Vec<usize> = labeled.iter().filter_map(|e| e.label).collect();
    if truth.len() != labeled.len() {
        return Err(SelectError::EmptyLabeledSet);
    }
    let queries: Vec<_> = labeled.iter().map(|e| Query::original(e, round)).collect();
    let preds: Vec<Vec<usize>> = peers.iter().map(|p| p.predict_batch(&queries)).collect();
    measure_error_from_predictions(&truth, &preds, num_classes, mode, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_on_consensus_samples() {
        let truth: Vec<usize> = vec![0; 10];
        let mut a = vec![0; 10];
        a[0] = 1;
        a[1] = 1;
        let est = measure_error_from_predictions(
            &truth,
            &[a.clone(), a],
            3,
            VoteMode::Paper,
            ErrorPolicy::ExcludeNoConsensus,
        )
        .unwrap();
        assert_eq!(est.error_rate, Ratio::new(1, 5));
        assert!(!est.floor_applied);
        assert_eq!(est.consensus_count, 10);
    }

    #[test]
    fn perfect_peers_hit_the_floor() {
        let truth = vec![0, 1, 2, 1];
        let est = measure_error_from_predictions(
            &truth,
            &[truth.clone(), truth.clone()],
            3,
            VoteMode::Paper,
            ErrorPolicy::ExcludeNoConsensus,
        )
        .unwrap();
        assert_eq!(est.error_rate, Ratio::new(1, 8));
        assert!(est.floor_applied);
    }

    #[test]
    fn disagreement_everywhere_has_no_consensus() {
        let truth = vec![0, 1];
        let err = measure_error_from_predictions(
            &truth,
            &[vec![0, 1], vec![1, 0]],
            2,
            VoteMode::Paper,
            ErrorPolicy::ExcludeNoConsensus,
        )
        .unwrap_err();
        assert_eq!(err, SelectError::NoConsensus);
    }

    #[test]
    fn no_consensus_counted_as_error() {
        let truth = vec![0, 0, 0, 0];
        let a = vec![0, 0, 1, 1];
        let b = vec![0, 0, 0, 1];
        let exclude = measure_error_from_predictions(
            &truth,
            &[a.clone(), b.clone()],
            2,
            VoteMode::Paper,
            ErrorPolicy::ExcludeNoConsensus,
        )
        .unwrap();
        assert_eq!(exclude.error_rate, Ratio::new(1, 3));
        let count = measure_error_from_predictions(
            &truth,
            &[a, b],
            2,
            VoteMode::Paper,
            ErrorPolicy::CountAsError,
        )
        .unwrap();
        assert_eq!(count.error_rate, Ratio::new(2, 4));
    }
}
