use num_rational::Ratio;
use thiserror::Error;

use crate::learners::BaseLearner;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("an ensemble needs at least 3 models, got {0}")]
    TooFewModels(usize),
}

/// The ensemble and its per-model bookkeeping.
pub struct EnsembleState<T: Real> {
    pub learners: Vec<Box<dyn BaseLearner<T>>>,
    /// Error `e'_j` recorded at the model's last update.
    pub prev_error: Vec<Ratio<u64>>,
    /// Pseudo-label count `L'_j` of the model's last update.
    pub prev_count: Vec<u64>,
    pub round: u32,
    pub update_flags: Vec<bool>,
}

impl<T: Real> EnsembleState<T> {
    pub fn new(learners: Vec<Box<dyn BaseLearner<T>>>) -> Result<Self, StateError> {
        let k = learners.len();
        if k < 3 {
            return Err(StateError::TooFewModels(k));
        }
        Ok(Self {
            learners,
            prev_error: vec![Ratio::new(1, 2); k],
            prev_count: vec![0; k],
            round: 0,
            update_flags: vec![false; k],
        })
    }

    pub fn k(&self) -> usize {
        self.learners.len()
    }

    pub fn reset_bookkeeping(&mut self) {
        let k = self.k();
        self.prev_error = vec![Ratio::new(1, 2); k];
        self.prev_count = vec![0; k];
        self.round = 0;
        self.update_flags = vec![false; k];
    }

    pub fn learner_refs(&self) -> Vec<&dyn BaseLearner<T>> {
        self.learners.iter().map(|l| l.as_ref()).collect()
    }
}

impl<T: Real> std::fmt::Debug for EnsembleState<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let families: Vec<_> = self.learners.iter().map(|l| l.family()).collect();
        f.debug_struct("EnsembleState")
            .field("learners", &families)
            .field("prev_error", &self.prev_error)
            .field("prev_count", &self.prev_count)
            .field("round", &self.round)
            .field("update_flags", &self.update_flags)
            .finish()
    }
}
