//! Three-stage pseudo-label selection.
//!
//! For a target model `j`, the `K - 1` peers vote on each unlabeled example
//! ([`inter_consistency`]), each peer must be stable under a weak view and
//! sensitive under a strong view ([`intra_consistency`]), and the two sets
//! are intersected. Error-aware filtering then gates the update and caps its
//! size with [`budget`] and [`lower_bound_ok`].

use thiserror::Error;

mod budget;
mod error_rate;
mod intra;
mod subsample;
mod vote;

pub use budget::{
    bootstrap_count, budget, lower_bound_ok, BudgetError, BudgetMode, ScaledRatio,
    MAX_ALPHA_DENOMINATOR,
};
pub use error_rate::{measure_error, measure_error_from_predictions, ErrorEstimate, ErrorPolicy};
pub use intra::{
    intra_consistency, intra_from_views, predict_views, AugmentedViews, ViewPredictions,
};
pub use subsample::subsample;
pub use vote::{inter_consistency, majority_label, VoteMode, VoteTally};

use crate::pseudo::{PseudoLabeledSet, Stage};

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("expected {expected} peer prediction lists, found {found}")]
    PeerCountMismatch { expected: usize, found: usize },
    #[error("peer {peer} has {found} predictions for {expected} examples")]
    PredictionLengthMismatch {
        peer: usize,
        expected: usize,
        found: usize,
    },
    #[error("predicted label {label} outside [0, {num_classes})")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("no labeled example produced a unique majority")]
    NoConsensus,
    #[error("labeled set is empty")]
    EmptyLabeledSet,
}

/// Pairs with identical `(id, label)` in both sets.
pub fn intersect(a: &PseudoLabeledSet, b: &PseudoLabeledSet) -> PseudoLabeledSet {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = PseudoLabeledSet::new(Stage::Intersection);
    for (id, y) in small.iter() {
        if large.contains(id, y) {
            out.insert(id, y)
                .expect("source set holds one label per id");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ExampleId;

    fn set(pairs: &[(u64, usize)]) -> PseudoLabeledSet {
        PseudoLabeledSet::from_pairs(Stage::Inter, pairs.iter().map(|&(i, y)| (ExampleId(i), y)))
            .unwrap()
    }

    #[test]
    fn intersection_cases() {
        let out = intersect(&set(&[(1, 1), (2, 2)]), &set(&[(1, 1)]));
        assert_eq!(out, set(&[(1, 1)]).with_stage(Stage::Intersection));
        assert!(intersect(&set(&[(1, 1)]), &set(&[(1, 2)])).is_empty());
        assert!(intersect(&set(&[(1, 1)]), &set(&[(3, 1)])).is_empty());
    }
}
