//! Pseudo-label budgets from successive error estimates.
//!
//! With `r = e_prev / e_cur` and exponent `m = alpha * t`:
//!
//! * budget (theorem form): `ceil(r^m * L_prev - 1)`
//! * budget (loop form): `floor(r^m * L_prev)`
//! * lower bound: `L_prev > e_cur^m / (e_prev^m - e_cur^m)`
//!
//! All three are evaluated exactly. `m` is a rational `p/q`, so every
//! comparison against an integer `N` reduces to comparing
//! `num^p * L^q` with `den^p * N^q` in big integers. A float estimate only
//! seeds the search for the answer.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{limit_denominator, Field};

/// `alpha` is rounded to the nearest rational with at most this denominator.
pub const MAX_ALPHA_DENOMINATOR: u64 = 1024;

const SEARCH_CAP: u64 = u64::MAX >> 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// `ceil(r^m * L_prev - 1)`.
    #[default]
    Theorem,
    /// `floor(r^m * L_prev)`.
    Algorithm,
}

#[derive(Debug, Error, PartialEq)]
pub enum BudgetError {
    #[error("current error {e_cur} must be positive and below previous error {e_prev}")]
    InvalidErrorRatio { e_prev: f64, e_cur: f64 },
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("round index must be at least 1")]
    ZeroRound,
    #[error("non-finite input")]
    NotFinite,
}

/// `(num / den)^(p / q)` with `num > den > 0` held as `num^p` and `den^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledRatio {
    num_pow: BigInt,
    den_pow: BigInt,
    q: u32,
    approx_ln: f64,
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::MAX).ln();
    }
    let shift = bits - 900;
    (n >> shift).to_f64().unwrap_or(f64::MAX).ln() + shift as f64 * std::f64::consts::LN_2
}

impl ScaledRatio {
    pub fn new<F: Field>(e_prev: F, e_cur: F, t: u32, alpha: F) -> Result<Self, BudgetError> {
        let prev = e_prev.to_exact().ok_or(BudgetError::NotFinite)?;
        let cur = e_cur.to_exact().ok_or(BudgetError::NotFinite)?;
        let alpha_exact = alpha.to_exact().ok_or(BudgetError::NotFinite)?;
        if t == 0 {
            return Err(BudgetError::ZeroRound);
        }
        if !alpha_exact.is_positive() {
            return Err(BudgetError::NonPositiveAlpha(alpha.approx_f64()));
        }
        if !cur.is_positive() || cur >= prev {
            return Err(BudgetError::InvalidErrorRatio {
                e_prev: e_prev.approx_f64(),
                e_cur: e_cur.approx_f64(),
            });
        }
        let alpha_q = limit_denominator(&alpha_exact, MAX_ALPHA_DENOMINATOR);
        let m = alpha_q * BigRational::from_integer(BigInt::from(t));
        let p = m.numer().to_u32().ok_or(BudgetError::NotFinite)?;
        let q = m.denom().to_u32().ok_or(BudgetError::NotFinite)?;
        let r = prev / cur;
        let num_pow = num_traits::pow(r.numer().clone(), p as usize);
        let den_pow = num_traits::pow(r.denom().clone(), p as usize);
        let approx_ln = (ln_big(r.numer()) - ln_big(r.denom())) * p as f64 / q as f64;
        Ok(Self {
            num_pow,
            den_pow,
            q,
            approx_ln,
        })
    }

    /// `r^m * l <= n`.
    fn scaled_le(&self, l: u64, n: u64) -> bool {
        let q = self.q as usize;
        &self.num_pow * num_traits::pow(BigInt::from(l), q)
            <= &self.den_pow * num_traits::pow(BigInt::from(n), q)
    }

    /// `r^m * l < n`.
    fn scaled_lt(&self, l: u64, n: u64) -> bool {
        let q = self.q as usize;
        &self.num_pow * num_traits::pow(BigInt::from(l), q)
            < &self.den_pow * num_traits::pow(BigInt::from(n), q)
    }

    fn approx(&self, l: u64) -> f64 {
        if l == 0 {
            return 0.0;
        }
        (self.approx_ln + (l as f64).ln()).exp()
    }

    /// `ceil(r^m * l)`.
    pub fn ceil_times(&self, l: u64) -> u64 {
        smallest_true(self.approx(l), |n| self.scaled_le(l, n))
    }

    /// `floor(r^m * l)`.
    pub fn floor_times(&self, l: u64) -> u64 {
        // Largest n with n <= r^m l is one below the smallest n with r^m l < n.
        smallest_true(self.approx(l) + 1.0, |n| self.scaled_lt(l, n)).saturating_sub(1)
    }

    /// `l > 1 / (r^m - 1)`, i.e. `r^m * l > l + 1`.
    pub fn lower_bound_holds(&self, l: u64) -> bool {
        l > 0 && !self.scaled_le(l, l + 1)
    }

    /// Smallest `l >= 1` satisfying the lower bound.
    pub fn minimal_count(&self) -> u64 {
        let x = self.approx_ln.exp();
        let guess = if x > 1.0 {
            1.0 / (x - 1.0)
        } else {
            SEARCH_CAP as f64
        };
        smallest_true(guess, |l| l >= 1 && !self.scaled_le(l, l + 1)).max(1)
    }
}

/// Smallest `n` in `[0, SEARCH_CAP]` with `pred(n)`, for `pred` monotone
/// false-then-true. Saturates at `SEARCH_CAP`.
fn smallest_true(guess: f64, pred: impl Fn(u64) -> bool) -> u64 {
    let g = if guess.is_finite() && guess > 0.0 {
        (guess as u64).min(SEARCH_CAP)
    } else if guess.is_finite() {
        0
    } else {
        SEARCH_CAP
    };
    let (mut lo, mut hi);
    if pred(g) {
        hi = g;
        let mut step = 1u64;
        loop {
            if hi == 0 {
                return 0;
            }
            let probe = hi.saturating_sub(step);
            if pred(probe) {
                hi = probe;
                step = step.saturating_mul(2);
            } else {
                lo = probe;
                break;
            }
        }
    } else {
        lo = g;
        let mut step = 1u64;
        loop {
            if lo >= SEARCH_CAP {
                return SEARCH_CAP;
            }
            let probe = lo.saturating_add(step).min(SEARCH_CAP);
            if pred(probe) {
                hi = probe;
                break;
            }
            lo = probe;
            step = step.saturating_mul(2);
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Maximum pseudo-label count for round `t`. Negative values saturate to 0.
pub fn budget<F: Field>(
    e_prev: F,
    e_cur: F,
    t: u32,
    alpha: F,
    l_prev: u64,
    mode: BudgetMode,
) -> Result<u64, BudgetError> {
    let x = ScaledRatio::new(e_prev, e_cur, t, alpha)?;
    Ok(match mode {
        BudgetMode::Theorem => x.ceil_times(l_prev).saturating_sub(1),
        BudgetMode::Algorithm => x.floor_times(l_prev),
    })
}

/// `e_cur < e_prev` and `L_prev > e_cur^m / (e_prev^m - e_cur^m)`.
///
/// Returns `false` for any input outside the domain (including `L_prev = 0`).
pub fn lower_bound_ok<F: Field>(e_prev: F, e_cur: F, t: u32, alpha: F, l_prev: u64) -> bool {
    match ScaledRatio::new(e_prev, e_cur, t, alpha) {
        Ok(x) => x.lower_bound_holds(l_prev),
        Err(_) => false,
    }
}

/// Initial count for a model without history: the smallest `L` passing the
/// lower bound, `floor(e_cur^m / (e_prev^m - e_cur^m)) + 1`.
pub fn bootstrap_count<F: Field>(
    e_prev: F,
    e_cur: F,
    t: u32,
    alpha: F,
) -> Result<u64, BudgetError> {
    Ok(ScaledRatio::new(e_prev, e_cur, t, alpha)?.minimal_count())
}
