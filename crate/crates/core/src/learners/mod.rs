//! Pluggable base learners.
//!
//! A learner is pretrained on a small sample covering the full label space,
//! so it can predict novel classes, and is then fine-tuned on labeled plus
//! pseudo-labeled data. Fine-tuning always warm-starts from the current
//! parameters.

use std::any::Any;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Example, ExampleId};
use crate::scalar::Real;

mod centroid;
mod knn;
mod logistic;
mod oracle;

pub use centroid::CentroidLearner;
pub use knn::{knn_predict, KnnLearner};
pub use logistic::{LogisticConfig, LogisticLearner, LossGradient};
pub use oracle::{ErrorModel, NoisyOracleConfig, NoisyOracleLearner};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("class {0} has no prototype from pretraining or fine-tuning")]
    NoPrototype(usize),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("feature width {found} differs from parameter width {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} outside [0, {num_classes})")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("k = {k} exceeds training set size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("learning rate must be positive")]
    NonPositiveLearningRate,
    #[error("snapshot belongs to a different learner type")]
    SnapshotMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Original,
    Weak,
    Strong,
}

impl View {
    pub fn key(self) -> u64 {
        match self {
            View::Original => 0,
            View::Weak => 1,
            View::Strong => 2,
        }
    }
}

/// One prediction request. Feature-based learners only read `features`.
#[derive(Clone, Copy, Debug)]
pub struct Query<'a, T> {
    pub id: ExampleId,
    pub features: &'a [T],
    pub round: u32,
    pub view: View,
}

impl<'a, T> Query<'a, T> {
    pub fn original(example: &'a Example<T>, round: u32) -> Self {
        Self {
            id: example.id,
            features: &example.features,
            round,
            view: View::Original,
        }
    }
}

/// A training pair. Labels may be ground truth or pseudo-labels.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a, T> {
    pub id: ExampleId,
    pub features: &'a [T],
    pub label: usize,
}

impl<'a, T> Sample<'a, T> {
    /// Borrows a labeled example. Returns `None` when it has no label.
    pub fn from_example(example: &'a Example<T>) -> Option<Self> {
        example.label.map(|label| Self {
            id: example.id,
            features: &example.features,
            label,
        })
    }
}

pub fn samples_of<T>(examples: &[Example<T>]) -> Vec<Sample<'_, T>> {
    examples.iter().filter_map(Sample::from_example).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerFamily {
    Centroid,
    Logistic,
    Knn,
    NoisyOracle,
}

pub trait BaseLearner<T: Real>: Send + Sync {
    fn family(&self) -> LearnerFamily;

    fn num_classes(&self) -> usize;

    /// Fits the learner over the full label space `[0, C)`.
    fn pretrain(&mut self, sample: &[Sample<'_, T>]) -> Result<(), LearnerError>;

    /// Continues training from the current parameters. `epochs == 0` is a no-op.
    fn fine_tune(
        &mut self,
        train: &[Sample<'_, T>],
        epochs: usize,
        learning_rate: T,
    ) -> Result<(), LearnerError>;

    /// Deterministic for fixed parameters. Ties resolve to the lowest class.
    fn predict(&self, query: &Query<'_, T>) -> usize;

    fn predict_batch(&self, queries: &[Query<'_, T>]) -> Vec<usize> {
        queries.iter().map(|q| self.predict(q)).collect()
    }

    fn snapshot(&self) -> Box<dyn BaseLearner<T>>;

    fn restore(&mut self, snapshot: &dyn BaseLearner<T>) -> Result<(), LearnerError>;

    fn as_any(&self) -> &dyn Any;

    /// Whether predictions read ground truth rather than features.
    fn uses_oracle(&self) -> bool {
        false
    }
}

pub(crate) fn restore_from<T: Real, L: Clone + 'static>(
    target: &mut L,
    snapshot: &dyn BaseLearner<T>,
) -> Result<(), LearnerError> {
    let source = snapshot
        .as_any()
        .downcast_ref::<L>()
        .ok_or(LearnerError::SnapshotMismatch)?;
    *target = source.clone();
    Ok(())
}

pub(crate) fn check_samples<T>(
    samples: &[Sample<'_, T>],
    dim: usize,
    num_classes: usize,
) -> Result<(), LearnerError> {
    for s in samples {
        if s.features.len() != dim {
            return Err(LearnerError::DimensionMismatch {
                expected: dim,
                found: s.features.len(),
            });
        }
        if s.label >= num_classes {
            return Err(LearnerError::LabelOutOfRange {
                label: s.label,
                num_classes,
            });
        }
    }
    Ok(())
}

/// Index of the largest score, lowest index on ties.
pub(crate) fn argmax<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}
