use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::data::ExampleId;
use crate::pseudo::{PseudoLabeledSet, Stage};

/// Acceptance threshold for the peer majority.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteMode {
    /// Unique argmax with at least `ceil((K-1)/2)` votes.
    #[default]
    Paper,
    /// Unique argmax with more than `(K-1)/2` votes.
    Strict,
}

impl VoteMode {
    pub fn accepts(self, votes: usize, voters: usize) -> bool {
        match self {
            VoteMode::Paper => votes >= voters.div_ceil(2),
            VoteMode::Strict => 2 * votes > voters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteTally {
    pub example_id: ExampleId,
    pub counts: Vec<usize>,
    /// `(label, count)` when the argmax is unique.
    pub winner: Option<(usize, usize)>,
}

impl VoteTally {
    pub fn from_votes(example_id: ExampleId, votes: &[usize], num_classes: usize) -> Self {
        let mut counts = vec![0; num_classes];
        for &v in votes {
            counts[v] += 1;
        }
        let max = counts.iter().copied().max().unwrap_or(0);
        let mut leaders = counts.iter().enumerate().filter(|(_, &c)| c == max);
        let winner = match (leaders.next(), leaders.next()) {
            (Some((label, &count)), None) if count > 0 => Some((label, count)),
            _ => None,
        };
        Self {
            example_id,
            counts,
            winner,
        }
    }

    pub fn voters(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn accepted(&self, mode: VoteMode) -> Option<usize> {
        self.winner
            .filter(|&(_, count)| mode.accepts(count, self.voters()))
            .map(|(label, _)| label)
    }
}

/// Majority label of `votes` under `mode`, or `None` when rejected.
pub fn majority_label(votes: &[usize], num_classes: usize, mode: VoteMode) -> Option<usize> {
    VoteTally::from_votes(ExampleId(0), votes, num_classes).accepted(mode)
}

pub(crate) fn check_predictions(
    peer_predictions: &[Vec<usize>],
    expected_peers: usize,
    expected_len: usize,
    num_classes: usize,
) -> Result<(), SelectError> {
    if peer_predictions.len() != expected_peers {
        return Err(SelectError::PeerCountMismatch {
            expected: expected_peers,
            found: peer_predictions.len(),
        });
    }
    for (peer, preds) in peer_predictions.iter().enumerate() {
        if preds.len() != expected_len {
            return Err(SelectError::PredictionLengthMismatch {
                peer,
                expected: expected_len,
                found: preds.len(),
            });
        }
        if let Some(&label) = preds.iter().find(|&&y| y >= num_classes) {
            return Err(SelectError::LabelOutOfRange { label, num_classes });
        }
    }
    Ok(())
}

/// Peer-majority pseudo-labels for the unlabeled examples `ids`.
///
/// `peer_predictions[k][i]` is peer `k`'s label for `ids[i]`; exactly `K - 1`
/// lists are required.
pub fn inter_consistency(
    ids: &[ExampleId],
    peer_predictions: &[Vec<usize>],
    k: usize,
    num_classes: usize,
    mode: VoteMode,
) -> Result<PseudoLabeledSet, SelectError> {
    check_predictions(
        peer_predictions,
        k.saturating_sub(1),
        ids.len(),
        num_classes,
    )?;
    let mut out = PseudoLabeledSet::new(Stage::Inter);
    let mut votes = Vec::with_capacity(peer_predictions.len());
    for (i, &id) in ids.iter().enumerate() {
        votes.clear();
        votes.extend(peer_predictions.iter().map(|p| p[i]));
        if let Some(label) = majority_label(&votes, num_classes, mode) {
            out.insert(id, label).expect("ids are unique");
        }
    }
    Ok(out)
}
