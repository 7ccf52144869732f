//! Scalar abstractions.
//!
//! Two families are used across the crate. [`Scalar`] is the ring-like
//! interface needed by the exact occupation identities and is implemented for
//! `f32`, `f64` and [`BigRational`]. [`Real`] is the floating point interface
//! used by the solvers and the exponent formulas.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

/// Field-like scalar with exact or floating semantics.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_count(v: u64) -> Self {
        Self::from_ratio(v as i64, 1)
    }

    /// `C(n, k)`, zero when `k > n`.
    fn binomial(n: u64, k: u64) -> Self;

    fn as_f64(&self) -> f64;

    /// Whether arithmetic on this type is exact.
    fn is_exact() -> bool;
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn binomial(n: u64, k: u64) -> Self {
                if k > n {
                    return 0.0;
                }
                let k = k.min(n - k);
                let mut acc: f64 = 1.0;
                for i in 1..=k {
                    acc = acc * (n - k + i) as f64 / i as f64;
                }
                acc.round() as $t
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }

            fn is_exact() -> bool {
                false
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn binomial(n: u64, k: u64) -> Self {
        BigRational::from_integer(BigInt::from(binomial_exact(n, k)))
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }
}

/// Exact binomial coefficient, zero when `k > n`.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// Floating point scalar used by the solvers and formula evaluation.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    /// Relative tolerance an iterative routine can realistically reach.
    fn solve_tolerance() -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(1e-13).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Table of `ln k!` for `k <= max`, built by cumulative summation.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_binomials() {
        assert_eq!(binomial_exact(0, 0), BigUint::one());
        assert_eq!(binomial_exact(5, 7), BigUint::zero());
        assert_eq!(binomial_exact(52, 5), BigUint::from(2_598_960u32));
        // 64-bit overflow territory for the factorial route
        assert_eq!(
            binomial_exact(67, 33).to_string(),
            "14226520737620288370"
        );
    }

    #[test]
    fn float_binomial_matches_exact() {
        for n in 0..60u64 {
            for k in 0..=n {
                let exact = binomial_exact(n, k).to_f64().unwrap();
                let approx = <f64 as Scalar>::binomial(n, k);
                assert!((exact - approx).abs() <= 1e-12 * exact);
            }
        }
    }

    #[test]
    fn ln_factorial_table() {
        let t = LnFactorials::new(30);
        assert_eq!(t.ln_factorial(0), 0.0);
        assert!((t.ln_factorial(10) - 3_628_800f64.ln()).abs() < 1e-12);
        assert!((t.ln_binomial(30, 15) - 155_117_520f64.ln()).abs() < 1e-10);
        assert_eq!(t.ln_binomial(3, 4), f64::NEG_INFINITY);
    }
}
