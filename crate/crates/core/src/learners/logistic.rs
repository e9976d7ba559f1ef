use std::any::Any;

use serde::{Deserialize, Serialize};

use super::{argmax, check_samples, restore_from};
use super::{BaseLearner, LearnerError, LearnerFamily, Query, Sample};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// L2 penalty on the weights (bias excluded).
    pub l2: f64,
    pub pretrain_epochs: usize,
    pub pretrain_learning_rate: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            pretrain_epochs: 100,
            pretrain_learning_rate: 0.5,
        }
    }
}

/// Mean cross-entropy loss and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGradient<T> {
    pub loss: T,
    /// Row-major `C x d`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Multinomial logistic regression trained by full-batch gradient descent.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticLearner<T> {
    num_classes: usize,
    dim: usize,
    /// Row-major `C x d`.
    weights: Vec<T>,
    bias: Vec<T>,
    l2: T,
    pretrain_epochs: usize,
    pretrain_lr: T,
}

impl<T: Real> LogisticLearner<T> {
    pub fn new(num_classes: usize, dim: usize, config: &LogisticConfig) -> Self {
        Self {
            num_classes,
            dim,
            weights: vec![T::zero(); num_classes * dim],
            bias: vec![T::zero(); num_classes],
            l2: T::from_f64_lossy(config.l2),
            pretrain_epochs: config.pretrain_epochs,
            pretrain_lr: T::from_f64_lossy(config.pretrain_learning_rate),
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn set_parameters(&mut self, weights: Vec<T>, bias: Vec<T>) -> Result<(), LearnerError> {
        if weights.len() != self.num_classes * self.dim || bias.len() != self.num_classes {
            return Err(LearnerError::DimensionMismatch {
                expected: self.num_classes * self.dim,
                found: weights.len(),
            });
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    pub fn logits(&self, features: &[T]) -> Vec<T> {
        (0..self.num_classes)
            .map(|c| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                row.iter()
                    .zip(features)
                    .fold(self.bias[c], |acc, (&w, &x)| acc + w * x)
            })
            .collect()
    }

    fn softmax_in_place(z: &mut [T]) {
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in z.iter_mut() {
            *v = (*v - max).exp();
            total = total + *v;
        }
        for v in z.iter_mut() {
            *v = *v / total;
        }
    }

    /// `mean_i CE(softmax(W x_i + b), y_i) + (l2 / 2) * ||W||^2`.
    pub fn loss_and_gradient(
        &self,
        train: &[Sample<'_, T>],
    ) -> Result<LossGradient<T>, LearnerError> {
        if train.is_empty() {
            return Err(LearnerError::EmptyTrainSet);
        }
        check_samples(train, self.dim, self.num_classes)?;
        let n = T::from_count(train.len() as u64);
        let mut gw = vec![T::zero(); self.weights.len()];
        let mut gb = vec![T::zero(); self.num_classes];
        let mut loss = T::zero();
        for s in train {
            let mut p = self.logits(s.features);
            let max = p.iter().copied().fold(T::neg_infinity(), T::max);
            let log_norm = p.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
            loss = loss + log_norm - p[s.label];
            Self::softmax_in_place(&mut p);
            p[s.label] = p[s.label] - T::one();
            for (c, &delta) in p.iter().enumerate() {
                gb[c] = gb[c] + delta;
                let row = &mut gw[c * self.dim..(c + 1) * self.dim];
                for (g, &x) in row.iter_mut().zip(s.features) {
                    *g = *g + delta * x;
                }
            }
        }
        let half = T::from_f64_lossy(0.5);
        let sq_norm: T = self.weights.iter().map(|&w| w * w).sum();
        for (g, &w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + self.l2 * w;
        }
        for g in gb.iter_mut() {
            *g = *g / n;
        }
        Ok(LossGradient {
            loss: loss / n + half * self.l2 * sq_norm,
            weights: gw,
            bias: gb,
        })
    }

    /// Runs `epochs` full-batch gradient steps and returns the loss before each step.
    pub fn fit(
        &mut self,
        train: &[Sample<'_, T>],
        epochs: usize,
        learning_rate: T,
    ) -> Result<Vec<T>, LearnerError> {
        if epochs == 0 {
            return Ok(Vec::new());
        }
        if learning_rate <= T::zero() {
            return Err(LearnerError::NonPositiveLearningRate);
        }
        let mut losses = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let g = self.loss_and_gradient(train)?;
            losses.push(g.loss);
            for (w, dw) in self.weights.iter_mut().zip(&g.weights) {
                *w = *w - learning_rate * *dw;
            }
            for (b, db) in self.bias.iter_mut().zip(&g.bias) {
                *b = *b - learning_rate * *db;
            }
        }
        Ok(losses)
    }

    pub fn predict_features(&self, features: &[T]) -> usize {
        argmax(&self.logits(features))
    }
}

impl<T: Real> BaseLearner<T> for LogisticLearner<T> {
    fn family(&self) -> LearnerFamily {
        LearnerFamily::Logistic
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn pretrain(&mut self, sample: &[Sample<'_, T>]) -> Result<(), LearnerError> {
        self.fit(sample, self.pretrain_epochs.max(1), self.pretrain_lr)?;
        Ok(())
    }

    fn fine_tune(
        &mut self,
        train: &[Sample<'_, T>],
        epochs: usize,
        learning_rate: T,
    ) -> Result<(), LearnerError> {
        self.fit(train, epochs, learning_rate).map(|_| ())
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
    use crate::rng;
    use rand::Rng;

    #[test]
    fn single_point_overfits() {
        let x = [0.3, -1.2, 2.0];
        let train = [Sample {
            id: ExampleId(0),
            features: &x[..],
            label: 2,
        }];
        let mut m = LogisticLearner::<f64>::new(4, 3, &LogisticConfig::default());
        m.fit(&train, 200, 0.5).unwrap();
        assert_eq!(m.predict_features(&x), 2);
    }

    #[test]
    fn zero_epochs_is_identity() {
        let x = [1.0, 1.0];
        let train = [Sample {
            id: ExampleId(0),
            features: &x[..],
            label: 1,
        }];
        let mut m = LogisticLearner::<f64>::new(2, 2, &LogisticConfig::default());
        m.set_parameters(vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.6])
            .unwrap();
        let before = m.clone();
        m.fine_tune(&train, 0, 0.1).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = [1.0];
        let train = [Sample {
            id: ExampleId(0),
            features: &x[..],
            label: 0,
        }];
        let mut m = LogisticLearner::<f64>::new(2, 2, &LogisticConfig::default());
        assert_eq!(
            m.fit(&train, 1, 0.1),
            Err(LearnerError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn works_in_single_precision() {
        let mut r = rng::stream(1, &[]);
        let pts: Vec<Vec<f32>> = (0..40)
            .map(|i| {
                let c = if i % 2 == 0 { 2.0 } else { -2.0 };
                vec![c + r.random::<f32>() - 0.5, c + r.random::<f32>() - 0.5]
            })
            .collect();
        let train: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| Sample {
                id: ExampleId(i as u64),
                features: &p[..],
                label: i % 2,
            })
            .collect();
        let mut m = LogisticLearner::<f32>::new(2, 2, &LogisticConfig::default());
        let losses = m.fit(&train, 50, 0.1).unwrap();
        assert!(losses.last().unwrap() < &losses[0]);
        assert_eq!(m.predict_features(&[2.0, 2.0]), 0);
        assert_eq!(m.predict_features(&[-2.0, -2.0]), 1);
    }
}
