//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the PLDA, mixture and clustering code.
///
/// Implemented for `f32` and `f64`. Transcendental functions come from
/// [`RealField`]; conversions go through `num-traits`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    fn neg_infinity() -> Self;
    fn epsilon() -> Self;

    /// Converts a literal, panicking only if `x` is not representable at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn neg_infinity() -> Self {
        f32::NEG_INFINITY
    }
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn neg_infinity() -> Self {
        f64::NEG_INFINITY
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// `ln(2π)`.
#[inline]
pub(crate) fn ln_two_pi<T: Real>() -> T {
    T::two_pi().ln()
}

/// Log-sum-exp over terms; `-inf` terms contribute nothing.
///
/// A single finite term is returned unchanged, bit for bit.
pub fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let max = terms
        .iter()
        .copied()
        .fold(T::neg_infinity(), |acc, x| if x > acc { x } else { acc });
    if max == T::neg_infinity() || !max.is_finite() {
        return max;
    }
    let sum = terms
        .iter()
        .filter(|x| **x != T::neg_infinity())
        .fold(T::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}
