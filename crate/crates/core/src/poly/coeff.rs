use std::fmt::Debug;

use crate::scalar::Scalar;

/// Coefficient ring of a [`Polynomial`](super::Polynomial).
///
/// Implemented by every [`Scalar`] (with a unit context) and by
/// [`EpsSeries`](super::EpsSeries), whose context is the truncation order.
pub trait Coeff: Clone + Debug + PartialEq + Send + Sync {
    type Scalar: Scalar;
    type Ctx: Clone + Debug + PartialEq + Send + Sync;

    fn ctx(&self) -> Self::Ctx;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn from_scalar(s: Self::Scalar, ctx: &Self::Ctx) -> Self;

    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, rhs: &Self);
    fn sub_assign(&mut self, rhs: &Self);
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, s: &Self::Scalar) -> Self;

    /// Largest entry magnitude, for tolerance bookkeeping.
    fn max_magnitude(&self) -> f64;
}

impl<S: Scalar> Coeff for S {
    type Scalar = S;
    type Ctx = ();

    fn ctx(&self) {}

    fn zero(_: &()) -> Self {
        S::zero()
    }

    fn from_scalar(s: S, _: &()) -> Self {
        s
    }

    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn add_assign(&mut self, rhs: &Self) {
        *self = self.clone() + rhs.clone();
    }

    fn sub_assign(&mut self, rhs: &Self) {
        *self = self.clone() - rhs.clone();
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.clone() * rhs.clone()
    }

    fn neg(&self) -> Self {
        -self.clone()
    }

    fn scale(&self, s: &S) -> Self {
        self.clone() * s.clone()
    }

    fn max_magnitude(&self) -> f64 {
        self.magnitude()
    }
}
