//! Numeric abstraction for scores, fractions and percentages.
//!
//! Every ratio the toolkit reports is a quotient of counts, so the math is
//! written once against [`Scalar`] and instantiated for `f64`, `f32` or an
//! exact rational such as `Ratio<i64>`.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Converts a count. Counts in this crate are far below 2^53, so the
    /// conversion is exact for `f64` and for 64-bit rationals.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn from_count_u64(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn ratio(num: usize, den: usize) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Harmonic mean of two rates, zero when both are zero.
pub fn harmonic_mean<S: Scalar>(a: S, b: S) -> S {
    let sum = a + b;
    if sum == S::zero() {
        S::zero()
    } else {
        (S::one() + S::one()) * a * b / sum
    }
}
