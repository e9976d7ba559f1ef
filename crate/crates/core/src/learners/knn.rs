use std::any::Any;

use super::{argmax, check_samples, restore_from, squared_distance};
use super::{BaseLearner, LearnerError, LearnerFamily, Query, Sample};
use crate::data::ExampleId;
use crate::scalar::Real;

/// Majority label among the `k` nearest training points.
///
/// Distance ties resolve to the lower example id, vote ties to the lower class.
pub fn knn_predict<T: Real>(
    train: &[Sample<'_, T>],
    features: &[T],
    k: usize,
    num_classes: usize,
) -> Result<usize, LearnerError> {
    if train.is_empty() {
        return Err(LearnerError::EmptyTrainSet);
    }
    if k == 0 {
        return Err(LearnerError::ZeroK);
    }
    if k > train.len() {
        return Err(LearnerError::KTooLarge {
            k,
            size: train.len(),
        });
    }
    let mut ranked: Vec<(T, ExampleId, usize)> = train
        .iter()
        .map(|s| (squared_distance(s.features, features), s.id, s.label))
        .collect();
    ranked.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut votes = vec![0usize; num_classes];
    for &(_, _, y) in &ranked[..k] {
        votes[y] += 1;
    }
    Ok(argmax(&votes))
}

#[derive(Clone, Debug, PartialEq)]
struct Stored<T> {
    id: ExampleId,
    features: Vec<T>,
    label: usize,
}

/// Memory-based learner. Fine-tuning replaces the non-pretrain part of memory.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnLearner<T> {
    k: usize,
    num_classes: usize,
    dim: usize,
    pretrained: Vec<Stored<T>>,
    tuned: Vec<Stored<T>>,
}

impl<T: Real> KnnLearner<T> {
    pub fn new(num_classes: usize, dim: usize, k: usize) -> Self {
        Self {
            k,
            num_classes,
            dim,
            pretrained: Vec::new(),
            tuned: Vec::new(),
        }
    }

    fn store(samples: &[Sample<'_, T>]) -> Vec<Stored<T>> {
        samples
            .iter()
            .map(|s| Stored {
                id: s.id,
                features: s.features.to_vec(),
                label: s.label,
            })
            .collect()
    }

    fn memory(&self) -> Vec<Sample<'_, T>> {
        self.pretrained
            .iter()
            .chain(&self.tuned)
            .map(|s| Sample {
                id: s.id,
                features: &s.features,
                label: s.label,
            })
            .collect()
    }

    fn check(&self, samples: &[Sample<'_, T>], extra: usize) -> Result<(), LearnerError> {
        if self.k == 0 {
            return Err(LearnerError::ZeroK);
        }
        if samples.is_empty() {
            return Err(LearnerError::EmptyTrainSet);
        }
        check_samples(samples, self.dim, self.num_classes)?;
        let size = samples.len() + extra;
        if self.k > size {
            return Err(LearnerError::KTooLarge { k: self.k, size });
        }
        Ok(())
    }
}

impl<T: Real> BaseLearner<T> for KnnLearner<T> {
    fn family(&self) -> LearnerFamily {
        LearnerFamily::Knn
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn pretrain(&mut self, sample: &[Sample<'_, T>]) -> Result<(), LearnerError> {
        self.check(sample, 0)?;
        self.pretrained = Self::store(sample);
        self.tuned.clear();
        Ok(())
    }

    fn fine_tune(
        &mut self,
        train: &[Sample<'_, T>],
        epochs: usize,
        _learning_rate: T,
    ) -> Result<(), LearnerError> {
        if epochs == 0 {
            return Ok(());
        }
        self.check(train, self.pretrained.len())?;
        self.tuned = Self::store(train);
        Ok(())
    }

    fn predict(&self, query: &Query<'_, T>) -> usize {
        // An unfitted learner falls back to class 0.
        knn_predict(&self.memory(), query.features, self.k, self.num_classes).unwrap_or(0)
    }

    fn snapshot(&self) -> Box<dyn BaseLearner<T>> {
        Box::new(self.clone())
    }

    fn restore(&mut self, snapshot: &dyn BaseLearner<T>) -> Result<(), LearnerError> {
        restore_from(self, snapshot)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_point_and_majority() {
        let pts = [[0.0], [1.0], [2.0], [10.0]];
        let labels = [1, 1, 2, 0];
        let train: Vec<_> = pts
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (p, y))| Sample {
                id: ExampleId(i as u64),
                features: &p[..],
                label: y,
            })
            .collect();
        assert_eq!(knn_predict(&train, &[10.0], 1, 3).unwrap(), 0);
        assert_eq!(knn_predict(&train, &[0.5], 3, 3).unwrap(), 1);
        assert_eq!(
            knn_predict::<f64>(&[], &[0.0], 1, 3),
            Err(LearnerError::EmptyTrainSet)
        );
        assert_eq!(
            knn_predict(&train, &[0.0], 5, 3),
            Err(LearnerError::KTooLarge { k: 5, size: 4 })
        );
    }

    #[test]
    fn distance_ties_use_lower_id() {
        let a = [1.0];
        let b = [-1.0];
        let train = [
            Sample {
                id: ExampleId(7),
                features: &a[..],
                label: 0,
            },
            Sample {
                id: ExampleId(3),
                features: &b[..],
                label: 1,
            },
        ];
        assert_eq!(knn_predict(&train, &[0.0], 1, 2).unwrap(), 1);
    }
}
