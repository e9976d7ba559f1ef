//! Calculators for the noisy-label PAC bound and the improvement condition.
//!
//! With `m` training samples, noise ratio `eta` and hypothesis class `F`,
//!
//! ```text
//! m >= 2 / (eps^2 (1 - 2 eta)^2) * ln(2 |F| / delta)
//! ```
//!
//! guarantees error at most `eps` with probability `1 - delta`. Writing
//! `c = 2 mu ln(2|F|/delta)`, `eps = sqrt(c / (m (1 - 2 eta)^2))`, so a round
//! improves the learner exactly when `m (1 - 2 eta)^2` grows.

use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, tag};
use crate::scalar::{Field, Real};
use crate::selector::{majority_label, VoteMode};

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("noise ratio {0} must lie in [0, 0.5)")]
    NoiseTooHigh(f64),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("delta {0} outside (0, 1)")]
    InvalidDelta(f64),
    #[error("hypothesis count must be at least 1")]
    EmptyHypothesisClass,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("c must be positive")]
    NonPositiveConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    pub epsilon: f64,
    pub eta: f64,
    pub hypothesis_count: u64,
    pub delta: f64,
    pub mu: f64,
}

impl PacParams {
    pub fn new(
        epsilon: f64,
        eta: f64,
        hypothesis_count: u64,
        delta: f64,
    ) -> Result<Self, TheoryError> {
        let p = Self {
            epsilon,
            eta,
            hypothesis_count,
            delta,
            mu: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        check_eta(self.eta)?;
        if !(self.epsilon > 0.0) {
            return Err(TheoryError::NonPositiveEpsilon);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(TheoryError::InvalidDelta(self.delta));
        }
        if self.hypothesis_count == 0 {
            return Err(TheoryError::EmptyHypothesisClass);
        }
        if !(self.mu > 0.0) {
            return Err(TheoryError::NonPositiveConstant);
        }
        Ok(())
    }

    /// `2 mu ln(2 |F| / delta)`.
    pub fn c(&self) -> f64 {
        2.0 * self.mu * log_term(self.hypothesis_count, self.delta)
    }

    pub fn sample_bound(&self) -> Result<u64, TheoryError> {
        pac_sample_bound(self.epsilon, self.eta, self.hypothesis_count, self.delta)
    }
}

fn check_eta(eta: f64) -> Result<(), TheoryError> {
    if eta.is_nan() || !(0.0..0.5).contains(&eta) {
        return Err(TheoryError::NoiseTooHigh(eta));
    }
    Ok(())
}

fn log_term(hypothesis_count: u64, delta: f64) -> f64 {
    (2.0 * hypothesis_count as f64).ln() - delta.ln()
}

/// `ceil(2 / (eps^2 (1 - 2 eta)^2) * ln(2 |F| / delta))`.
pub fn pac_sample_bound(
    epsilon: f64,
    eta: f64,
    hypothesis_count: u64,
    delta: f64,
) -> Result<u64, TheoryError> {
    let p = PacParams {
        epsilon,
        eta,
        hypothesis_count,
        delta,
        mu: 1.0,
    };
    p.validate()?;
    let margin = 1.0 - 2.0 * eta;
    let m = 2.0 / (epsilon * epsilon * margin * margin) * log_term(hypothesis_count, delta);
    Ok(m.ceil() as u64)
}

/// `m (1 - 2 eta)^2`. Larger means a tighter bound.
pub fn precision_index<F: Field>(m: u64, eta: F) -> F {
    let two = F::from_count(2);
    let margin = F::one() - two * eta;
    F::from_count(m) * margin.clone() * margin
}

/// `sqrt(c) / sqrt(m (1 - 2 eta)^2)`.
pub fn epsilon_from<T: Real>(m: u64, eta: T, c: T) -> Result<T, TheoryError> {
    check_eta(eta.approx_f64())?;
    if m == 0 {
        return Err(TheoryError::ZeroSamples);
    }
    if !(c > T::zero()) {
        return Err(TheoryError::NonPositiveConstant);
    }
    Ok((c / precision_index(m, eta)).sqrt())
}

/// Noise ratio of `D_L` plus `L_t` pseudo-labels with error `e`: `e L_t / (L + L_t)`.
pub fn noise_ratio<F: Field>(e: F, pseudo_count: u64, labeled_count: u64) -> F {
    let total = pseudo_count + labeled_count;
    if total == 0 {
        return F::zero();
    }
    e * F::from_count(pseudo_count) / F::from_count(total)
}

/// `0 < e_t / e_prev < L_prev / L_t < 1`, evaluated exactly without division.
///
/// Returns false when `e_prev <= 0`, `L_t == 0` or an input is not finite.
pub fn lemma1_holds<F: Field>(e_t: F, e_prev: F, l_t: u64, l_prev: u64) -> bool {
    let (Some(e_t), Some(e_prev)) = (e_t.to_exact(), e_prev.to_exact()) else {
        return false;
    };
    if !e_prev.is_positive() || l_t == 0 {
        return false;
    }
    e_t.is_positive() && fewer_errors(&e_t, &e_prev, l_t, l_prev) && l_prev < l_t
}

/// `e_t L_t < e_prev L_prev`.
fn fewer_errors(e_t: &BigRational, e_prev: &BigRational, l_t: u64, l_prev: u64) -> bool {
    e_t * BigRational::from_count(l_t) < e_prev * BigRational::from_count(l_prev)
}

/// Both sides of the comparison `(L + L_t)(1 - 2 eta_t)^2 > (L + L_prev)(1 - 2 eta_prev)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<F> {
    pub holds: bool,
    pub eta_t: F,
    pub eta_prev: F,
    pub lhs: F,
    pub rhs: F,
}

impl<F: Field> Witness<F> {
    pub fn inequality_holds(&self) -> bool {
        self.lhs > self.rhs
    }
}

/// `(L_t > L_prev) and (e_t L_t < e_prev L_prev)`, decided exactly, with the
/// improvement witness.
pub fn sufficient_condition_holds<F: Field>(
    e_t: F,
    e_prev: F,
    l_t: u64,
    l_prev: u64,
    labeled_count: u64,
) -> Witness<F> {
    let holds = l_t > l_prev
        && match (e_t.to_exact(), e_prev.to_exact()) {
            (Some(a), Some(b)) => fewer_errors(&a, &b, l_t, l_prev),
            _ => false,
        };
    let eta_t = noise_ratio(e_t, l_t, labeled_count);
    let eta_prev = noise_ratio(e_prev, l_prev, labeled_count);
    Witness {
        holds,
        lhs: precision_index(labeled_count + l_t, eta_t.clone()),
        rhs: precision_index(labeled_count + l_prev, eta_prev.clone()),
        eta_t,
        eta_prev,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteSimulation {
    pub trials: u64,
    pub accepted: u64,
    pub wrong: u64,
}

impl VoteSimulation {
    /// `P(majority wrong | accepted)`, `None` when nothing was accepted.
    pub fn conditional_error(&self) -> Option<f64> {
        (self.accepted > 0).then(|| self.wrong as f64 / self.accepted as f64)
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.trials as f64
    }
}

const MC_CHUNK: u64 = 1 << 16;

/// Simulates independent peers with uniform-wrong errors and the unique-argmax vote.
pub fn mc_vote_error(
    peer_accuracies: &[f64],
    num_classes: usize,
    trials: u64,
    seed: u64,
) -> VoteSimulation {
    assert!(num_classes >= 2, "need at least two classes");
    let chunks = trials.div_ceil(MC_CHUNK);
    let (accepted, wrong) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut r = rng::stream(seed, &[tag::MONTE_CARLO, chunk]);
            let n = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            let mut votes = vec![0usize; peer_accuracies.len()];
            let (mut acc, mut bad) = (0u64, 0u64);
            for _ in 0..n {
                let y = r.random_range(0..num_classes);
                for (v, &p) in votes.iter_mut().zip(peer_accuracies) {
                    *v = if r.random::<f64>() < p {
                        y
                    } else {
                        let w = r.random_range(0..num_classes - 1);
                        if w >= y {
                            w + 1
                        } else {
                            w
                        }
                    };
                }
                if let Some(label) = majority_label(&votes, num_classes, VoteMode::Paper) {
                    acc += 1;
                    if label != y {
                        bad += 1;
                    }
                }
            }
            (acc, bad)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    VoteSimulation {
        trials,
        accepted,
        wrong,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn pac_examples() {
        assert_eq!(pac_sample_bound(0.1, 0.1, 100, 0.05), Ok(2592));
        let noise_free = pac_sample_bound(0.1, 0.0, 100, 0.05).unwrap();
        assert_eq!(noise_free, (200.0 * 4000f64.ln()).ceil() as u64);
        assert_eq!(
            pac_sample_bound(0.1, 0.5, 100, 0.05),
            Err(TheoryError::NoiseTooHigh(0.5))
        );
    }

    #[test]
    fn epsilon_scaling() {
        let a = epsilon_from(100, 0.1, 2.0).unwrap();
        let b = epsilon_from(400, 0.1, 2.0).unwrap();
        assert!((a / b - 2.0f64).abs() < 1e-12);
        assert!(epsilon_from(100, 0.49, 2.0).unwrap() > epsilon_from(100, 0.4, 2.0).unwrap());
        assert!(epsilon_from(100, 0.5, 2.0).is_err());
    }

    #[test]
    fn noise_ratio_examples() {
        assert!((noise_ratio(0.1, 100, 50) - 1.0 / 15.0f64).abs() < 1e-15);
        assert_eq!(noise_ratio(0.3, 0, 50), 0.0);
        assert_eq!(noise_ratio(1.0, 7, 0), 1.0);
    }

    #[test]
    fn lemma_examples() {
        assert!(lemma1_holds(0.1, 0.2, 150, 100));
        assert!(!lemma1_holds(0.1, 0.2, 100, 100));
        assert!(!lemma1_holds(0.2, 0.2, 150, 100));
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert!(lemma1_holds(r(1, 10), r(2, 10), 150, 100));
        let w = sufficient_condition_holds(r(1, 10), r(2, 10), 150, 100, 50);
        assert!(w.holds && w.inequality_holds());
        assert!(!sufficient_condition_holds(0.1, 0.2, 100, 100, 50).holds);
    }

    #[test]
    fn simulation_edges() {
        let sure = mc_vote_error(&[1.0, 1.0], 3, 1000, 1);
        assert_eq!(sure.conditional_error(), Some(0.0));
        assert_eq!(sure.acceptance_rate(), 1.0);
        assert_eq!(
            mc_vote_error(&[0.7, 0.8], 2, 5000, 9),
            mc_vote_error(&[0.7, 0.8], 2, 5000, 9)
        );
    }
}
