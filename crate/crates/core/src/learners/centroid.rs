use std::any::Any;

use super::{argmax, check_samples, restore_from, squared_distance};
use super::{BaseLearner, LearnerError, LearnerFamily, Query, Sample};
use crate::scalar::Real;

/// Nearest class mean under Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidLearner<T> {
    dim: usize,
    centroids: Vec<Option<Vec<T>>>,
}

impl<T: Real> CentroidLearner<T> {
    pub fn new(num_classes: usize, dim: usize) -> Self {
        Self {
            dim,
            centroids: vec![None; num_classes],
        }
    }

    pub fn centroid(&self, class: usize) -> Option<&[T]> {
        self.centroids.get(class).and_then(|c| c.as_deref())
    }

    /// Replaces the centroid of every class present in `train`.
    fn fit(&mut self, train: &[Sample<'_, T>]) -> Result<(), LearnerError> {
        if train.is_empty() {
            return Err(LearnerError::EmptyTrainSet);
        }
        check_samples(train, self.dim, self.centroids.len())?;
        let c = self.centroids.len();
        let mut sums = vec![vec![T::zero(); self.dim]; c];
        let mut counts = vec![0usize; c];
        for s in train {
            counts[s.label] += 1;
            for (acc, &x) in sums[s.label].iter_mut().zip(s.features) {
                *acc = *acc + x;
            }
        }
        for (class, (sum, n)) in sums.into_iter().zip(counts).enumerate() {
            if n > 0 {
                let n = T::from_count(n as u64);
                self.centroids[class] = Some(sum.into_iter().map(|v| v / n).collect());
            }
        }
        match self.centroids.iter().position(Option::is_none) {
            Some(missing) => Err(LearnerError::NoPrototype(missing)),
            None => Ok(()),
        }
    }

    pub fn predict_features(&self, features: &[T]) -> usize {
        let neg_dist: Vec<T> = self
            .centroids
            .iter()
            .map(|c| match c {
                Some(c) => -squared_distance(c, features),
                None => T::neg_infinity(),
            })
            .collect();
        argmax(&neg_dist)
    }
}

impl<T: Real> BaseLearner<T> for CentroidLearner<T> {
    fn family(&self) -> LearnerFamily {
        LearnerFamily::Centroid
    }

    fn num_classes(&self) -> usize {
        self.centroids.len()
    }

    fn pretrain(&mut self, sample: &[Sample<'_, T>]) -> Result<(), LearnerError> {
        self.fit(sample)
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
        self.fit(train)
    }

    fn predict(&self, query: &Query<'_, T>) -> usize {
        self.predict_features(query.features)
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
    use crate::data::ExampleId;

    fn s(id: u64, f: &[f64], y: usize) -> Sample<'_, f64> {
        Sample {
            id: ExampleId(id),
            features: f,
            label: y,
        }
    }

    #[test]
    fn geometry_and_ties() {
        let a = [0.0, 0.0];
        let b = [10.0, 10.0];
        let mut m = CentroidLearner::new(2, 2);
        m.pretrain(&[s(0, &a, 0), s(1, &b, 1)]).unwrap();
        assert_eq!(m.predict_features(&[1.0, 1.0]), 0);
        assert_eq!(m.predict_features(&[9.0, 9.5]), 1);
        assert_eq!(m.predict_features(&[5.0, 5.0]), 0);
    }

    #[test]
    fn centroid_is_the_mean() {
        let a = [0.0, 0.0];
        let b = [2.0, 0.0];
        let c = [7.0, 7.0];
        let mut m = CentroidLearner::new(2, 2);
        m.pretrain(&[s(0, &a, 0), s(1, &b, 0), s(2, &c, 1)])
            .unwrap();
        assert_eq!(m.centroid(0), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn absent_classes_keep_pretrained_centroids() {
        let a = [0.0];
        let b = [4.0];
        let a2 = [1.0];
        let mut m = CentroidLearner::new(2, 1);
        m.pretrain(&[s(0, &a, 0), s(1, &b, 1)]).unwrap();
        m.fine_tune(&[s(2, &a2, 0)], 1, 0.1).unwrap();
        assert_eq!(m.centroid(0), Some(&[1.0][..]));
        assert_eq!(m.centroid(1), Some(&[4.0][..]));
    }

    #[test]
    fn missing_prototype_is_an_error() {
        let a = [0.0];
        let mut m = CentroidLearner::<f64>::new(3, 1);
        assert_eq!(
            m.pretrain(&[s(0, &a, 0)]),
            Err(LearnerError::NoPrototype(1))
        );
        assert_eq!(m.pretrain(&[]), Err(LearnerError::EmptyTrainSet));
    }
}
