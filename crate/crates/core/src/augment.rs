//! Weak and strong perturbations of feature vectors.
//!
//! Weak views add small Gaussian noise. Strong views add larger noise and
//! then zero each feature independently with `strong_dropout_prob`. Noise
//! scales are relative to a per-feature scale vector, normally the feature
//! standard deviations of the training data. A view is a pure function of
//! `(seed, example id, round, view)`, so all models in a round see the same
//! augmented inputs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Example, ExampleId};
use crate::learners::View;
use crate::rng::{self, tag};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("noise sigmas must be finite and non-negative")]
    NegativeSigma,
    #[error("strong sigma {strong} is below weak sigma {weak}")]
    StrongBelowWeak { weak: f64, strong: f64 },
    #[error("dropout probability {0} outside [0, 1)")]
    InvalidDropout(f64),
    #[error("scale vector has {found} entries, expected {expected}")]
    ScaleLength { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Multiple of the per-feature scale.
    pub weak_noise_sigma: f64,
    pub strong_noise_sigma: f64,
    pub strong_dropout_prob: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            weak_noise_sigma: 0.05,
            strong_noise_sigma: 0.5,
            strong_dropout_prob: 0.2,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.weak_noise_sigma) || !finite_nonneg(self.strong_noise_sigma) {
            return Err(AugmentError::NegativeSigma);
        }
        if self.strong_noise_sigma < self.weak_noise_sigma {
            return Err(AugmentError::StrongBelowWeak {
                weak: self.weak_noise_sigma,
                strong: self.strong_noise_sigma,
            });
        }
        if !(0.0..1.0).contains(&self.strong_dropout_prob) {
            return Err(AugmentError::InvalidDropout(self.strong_dropout_prob));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Augmentor<T> {
    config: AugmentConfig,
    scale: Vec<T>,
}

impl<T: Real> Augmentor<T> {
    pub fn new(config: AugmentConfig, scale: Vec<T>) -> Result<Self, AugmentError> {
        config.validate()?;
        Ok(Self { config, scale })
    }

    /// Unit scale on every feature, so sigmas are absolute.
    pub fn absolute(config: AugmentConfig, dim: usize) -> Result<Self, AugmentError> {
        Self::new(config, vec![T::one(); dim])
    }

    /// Scales noise by the per-feature standard deviation of `examples`.
    pub fn fitted(
        config: AugmentConfig,
        examples: &[Example<T>],
        dim: usize,
    ) -> Result<Self, AugmentError> {
        Self::new(config, feature_std(examples, dim))
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    fn noisy(&self, features: &[T], sigma: f64, rng: &mut impl Rng) -> Vec<T> {
        features
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let z: f64 = StandardNormal.sample(rng);
                let s = self.scale.get(i).copied().unwrap_or_else(T::one);
                if sigma == 0.0 {
                    x
                } else {
                    x + T::from_f64_lossy(sigma * z) * s
                }
            })
            .collect()
    }

    pub fn weak(&self, features: &[T], id: ExampleId, round: u32) -> Vec<T> {
        let mut r = rng::stream(self.config.seed, &[tag::AUG_WEAK, id.0, round as u64]);
        self.noisy(features, self.config.weak_noise_sigma, &mut r)
    }

    pub fn strong(&self, features: &[T], id: ExampleId, round: u32) -> Vec<T> {
        let mut r = rng::stream(self.config.seed, &[tag::AUG_STRONG, id.0, round as u64]);
        let mut out = self.noisy(features, self.config.strong_noise_sigma, &mut r);
        let p = self.config.strong_dropout_prob;
        if p > 0.0 {
            for v in out.iter_mut() {
                if r.random::<f64>() < p {
                    *v = T::zero();
                }
            }
        }
        out
    }

    pub fn view(&self, features: &[T], id: ExampleId, round: u32, view: View) -> Vec<T> {
        match view {
            View::Original => features.to_vec(),
            View::Weak => self.weak(features, id, round),
            View::Strong => self.strong(features, id, round),
        }
    }
}

/// Population standard deviation per feature; zero-variance features get 1.
pub fn feature_std<T: Real>(examples: &[Example<T>], dim: usize) -> Vec<T> {
    if examples.is_empty() {
        return vec![T::one(); dim];
    }
    let n = T::from_count(examples.len() as u64);
    (0..dim)
        .map(|i| {
            let mean = examples.iter().map(|e| e.features[i]).sum::<T>() / n;
            let var = examples
                .iter()
                .map(|e| (e.features[i] - mean) * (e.features[i] - mean))
                .sum::<T>()
                / n;
            let s = var.sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect()
}
