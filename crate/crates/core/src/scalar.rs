//! Scalar types usable as Test scores.
//!
//! The search algorithms only need comparison, exact zero, addition and
//! subtraction, so they are written against [`Scalar`] rather than `f64`.
//! `f32` and `f64` cover real backends; [`num_rational::Rational64`] and
//! [`num_rational::BigRational`] give exact arithmetic for synthetic
//! instances where subset sums must never round.

use std::fmt::{Debug, Display};

use num_traits::{Num, Signed, ToPrimitive};

/// A non-negative-capable numeric type a Test can return.
pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + Display + ToPrimitive + Send + Sync + 'static
{
    /// `2^-exp`, exactly.
    fn inverse_pow2(exp: u32) -> Self {
        let two = Self::one() + Self::one();
        Self::one() / num_traits::pow(two, exp as usize)
    }

    /// Lossy conversion for reports and logs.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_positive_score(&self) -> bool {
        *self > Self::zero()
    }

    /// `|a - b| <= epsilon`. With a zero epsilon this is exact equality.
    fn approx_eq(&self, other: &Self, epsilon: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= *epsilon
    }
}

impl<T> Scalar for T where
    T: Num + Signed + PartialOrd + Clone + Debug + Display + ToPrimitive + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn inverse_pow2_is_exact() {
        assert_eq!(f64::inverse_pow2(0), 1.0);
        assert_eq!(f64::inverse_pow2(10), 1.0 / 1024.0);
        assert_eq!(f32::inverse_pow2(3), 0.125);
        assert_eq!(Rational64::inverse_pow2(40), Rational64::new(1, 1 << 40));
    }

    #[test]
    fn approx_eq_zero_epsilon_is_exact() {
        assert!(0.25f64.approx_eq(&0.25, &0.0));
        assert!(!0.25f64.approx_eq(&(0.25 + f64::EPSILON), &0.0));
        assert!(0.25f64.approx_eq(&0.2500001, &1e-6));
    }
}
