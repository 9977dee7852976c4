//! Scalar abstraction shared by the exact and floating-point backends.
//!
//! Everything in [`crate::clifford`], [`crate::mobius`] and [`crate::calculus`]
//! is generic over [`Scalar`]. Exact rationals make algebraic identities
//! checkable with zero residual; `f64` drives the kernel numerics.

use core::fmt::Debug;
use core::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Coefficient field of the Clifford algebra.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// `true` for backends with exact arithmetic.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// Lossy conversion used for reporting.
    fn to_f64(&self) -> f64;

    /// Converts a float. Exact backends take the binary value of `v` exactly.
    fn from_f64(v: f64) -> Self;

    fn abs(&self) -> Self;

    /// Whether `x` is zero up to the backend's working precision relative to `scale`.
    ///
    /// Exact backends demand `x == 0`.
    fn negligible(x: &Self, scale: &Self) -> bool;
}

/// Scalars with square roots and the rest of the float toolbox.
pub trait RealScalar: Scalar + Float + FromPrimitive {
    /// Relative tolerance used by [`Scalar::negligible`].
    fn working_tolerance() -> Self;
}

macro_rules! impl_float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_f64(v: f64) -> Self {
                v as $t
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }

            fn negligible(x: &Self, scale: &Self) -> bool {
                <$t>::abs(*x) <= $tol * <$t>::max(<$t>::abs(*scale), 1.0)
            }
        }

        impl RealScalar for $t {
            fn working_tolerance() -> Self {
                $tol
            }
        }
    };
}

impl_float_scalar!(f64, 1e-9);
impl_float_scalar!(f32, 1e-4);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn negligible(x: &Self, _scale: &Self) -> bool {
        x.is_zero()
    }
}

/// Builds the rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_negligible_is_exact() {
        let tiny = ratio(1, 1_000_000_000_000);
        assert!(!<BigRational as Scalar>::negligible(&tiny, &ratio(1, 1)));
        assert!(<BigRational as Scalar>::negligible(&ratio(0, 5), &ratio(1, 1)));
    }

    #[test]
    fn float_negligible_is_relative() {
        assert!(f64::negligible(&1e-7, &1e3));
        assert!(!f64::negligible(&1e-7, &1.0));
    }

    #[test]
    fn from_f64_is_exact_for_dyadics() {
        assert_eq!(<BigRational as Scalar>::from_f64(0.375), ratio(3, 8));
    }
}
