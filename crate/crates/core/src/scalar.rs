//! Scalar abstraction shared by the algebraic layers.
//!
//! The polynomial, tensor, Gaussian and coefficient code is written against
//! [`Scalar`] so the same routines run in `f64` (the default), `f32`, or exact
//! rational arithmetic. The numerical oracles are `f64` only.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Signed, ToPrimitive};

/// A field-like scalar: signed, cloneable, convertible from small integers.
pub trait Scalar:
    Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer not representable in scalar type")
    }

    /// `num / den` computed in the scalar's own arithmetic.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    /// Lossy magnitude used for tolerance checks.
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    /// Relative size below which a coefficient that should vanish is treated as rounding.
    const ZERO_TOL: f64 = 0.0;

    /// Whether the scalar is bit-for-bit (or exactly, for rationals) zero.
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const ZERO_TOL: f64 = 1e-12;
}
impl Scalar for f32 {
    const ZERO_TOL: f64 = 1e-5;
}
impl Scalar for Rational64 {}
impl Scalar for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}
