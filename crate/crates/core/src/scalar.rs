//! Scalar abstractions shared by every numeric module.
//!
//! Two tiers exist. [`Field`] covers anything with exact ordered arithmetic,
//! which includes the big rationals used by the budget and bound calculators.
//! [`Real`] adds the transcendental operations needed by learners and
//! augmentation, and is only implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Ordered field element convertible to an exact rational.
pub trait Field: Clone + Num + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;

    /// Nearest `f64`. Lossy for rationals.
    fn approx_f64(&self) -> f64;

    /// Exact rational value, `None` for NaN or infinities.
    ///
    /// Floats are converted through their shortest round-trip decimal form,
    /// so `0.3_f64` becomes exactly `3/10`.
    fn to_exact(&self) -> Option<BigRational>;
}

/// Floating point scalar used by learners, augmentation and generators.
pub trait Real:
    Field + Float + FromPrimitive + ToPrimitive + Sum + Default + Display + Send + Sync + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}

macro_rules! float_field {
    ($t:ty) => {
        impl Field for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn approx_f64(&self) -> f64 {
                *self as f64
            }

            fn to_exact(&self) -> Option<BigRational> {
                if !self.is_finite() {
                    return None;
                }
                parse_decimal(&format!("{:e}", self))
            }
        }
    };
}

float_field!(f32);
float_field!(f64);

impl Field for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn approx_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn to_exact(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

impl Field for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }

    fn approx_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn to_exact(&self) -> Option<BigRational> {
        Some(BigRational::new(
            BigInt::from(*self.numer()),
            BigInt::from(*self.denom()),
        ))
    }
}

/// Converts a big rational to the nearest representable `f64` (up to one ulp).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (n, d) = (r.numer(), r.denom());
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // Shift both operands into f64 range first.
            let nb = n.bits() as i64;
            let db = d.bits() as i64;
            let shift_n = (nb - 1000).max(0) as u64;
            let shift_d = (db - 1000).max(0) as u64;
            let a = (n.abs() >> shift_n).to_f64().unwrap_or(f64::MAX);
            let b = (d >> shift_d).to_f64().unwrap_or(f64::MAX);
            let v = a / b * 2f64.powi((shift_n as i64 - shift_d as i64) as i32);
            if n.is_negative() {
                -v
            } else {
                v
            }
        }
    }
}

/// Parses a plain or scientific decimal literal into an exact rational.
///
/// Accepts an optional sign, digits with at most one `.`, and an optional
/// `e`/`E` exponent. Returns `None` on anything else.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mut numer: BigInt = joined.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent as i64 - frac_part.len() as i64;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Best rational approximation with denominator at most `max_denom`
/// (continued-fraction convergents and semiconvergents).
pub fn limit_denominator(x: &BigRational, max_denom: u64) -> BigRational {
    let max_d = BigInt::from(max_denom);
    if x.denom() <= &max_d {
        return x.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) =
        (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = num_integer::Integer::div_floor(&n, &d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_d {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
        if d.is_zero() {
            break;
        }
    }
    let k = (&max_d - &q0) / &q1;
    let bound1 = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let bound2 = BigRational::new(p1, q1);
    if (&bound2 - x).abs() <= (&bound1 - x).abs() {
        bound2
    } else {
        bound1
    }
}
