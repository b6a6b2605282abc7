//! Truncated power series in the formal parameter ε.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::coeff::Coeff;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `c₀ + c₁ε + … + c_Lε^L`; every product drops orders above `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSeries<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> EpsSeries<S> {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![S::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(S::one(), order)
    }

    /// Embedding of a plain scalar: `(s, 0, …, 0)`.
    pub fn constant(s: S, order: usize) -> Self {
        let mut out = Self::zero(order);
        out.coeffs[0] = s;
        out
    }

    /// `s · ε^power`, or zero if `power > order`.
    pub fn monomial(s: S, power: usize, order: usize) -> Self {
        let mut out = Self::zero(order);
        if power <= order {
            out.coeffs[power] = s;
        }
        out
    }

    /// Builds a series from explicit coefficients; entries past `order` are dropped,
    /// missing ones are zero.
    pub fn from_coeffs(mut coeffs: Vec<S>, order: usize) -> Self {
        coeffs.resize(order + 1, S::zero());
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `ε^k` (zero past the truncation order).
    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn set_coeff(&mut self, k: usize, value: S) {
        if k < self.coeffs.len() {
            self.coeffs[k] = value;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Lowest order carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Multiplies by `ε^k`, discarding what falls off the end.
    pub fn shift_up(&self, k: usize) -> Self {
        let order = self.order();
        let mut out = Self::zero(order);
        for i in 0..=order {
            if i + k <= order {
                out.coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        out
    }

    /// Divides by `ε^k`. The low `k` coefficients must vanish; the top `k`
    /// slots of the result are zero (unknown beyond the input's precision).
    pub fn shift_down(&self, k: usize) -> Result<Self> {
        if let Some(v) = self.valuation() {
            if v < k {
                return Err(Error::Structure(format!("cannot divide by eps^{k}: series has a nonzero eps^{v} term")));
            }
        }
        let order = self.order();
        let mut out = Self::zero(order);
        for i in k..=order {
            out.coeffs[i - k] = self.coeffs[i].clone();
        }
        Ok(out)
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    /// Multiplicative inverse, defined when the constant term is nonzero.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.coeffs[0].clone();
        if c0.is_zero() {
            return Err(Error::NonInvertible);
        }
        let order = self.order();
        let mut inv = Self::zero(order);
        inv.coeffs[0] = S::one() / c0.clone();
        for n in 1..=order {
            let mut acc = S::zero();
            for k in 1..=n {
                acc = acc + self.coeffs[k].clone() * inv.coeffs[n - k].clone();
            }
            inv.coeffs[n] = -acc / c0.clone();
        }
        Ok(inv)
    }

    /// Truncates to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.coeffs[..=order.min(self.order())].to_vec(), order)
    }

    /// Numerical value at a concrete ε (Horner).
    pub fn eval(&self, eps: &S) -> S {
        self.coeffs.iter().rev().fold(S::zero(), |acc, c| acc * eps.clone() + c.clone())
    }

    fn common_order(&self, rhs: &Self) -> usize {
        self.order().min(rhs.order())
    }
}

impl<S: Scalar> Add for &EpsSeries<S> {
    type Output = EpsSeries<S>;
    fn add(self, rhs: Self) -> EpsSeries<S> {
        let order = self.common_order(rhs);
        let coeffs = (0..=order).map(|i| self.coeffs[i].clone() + rhs.coeffs[i].clone()).collect();
        EpsSeries { coeffs }
    }
}

impl<S: Scalar> Sub for &EpsSeries<S> {
    type Output = EpsSeries<S>;
    fn sub(self, rhs: Self) -> EpsSeries<S> {
        let order = self.common_order(rhs);
        let coeffs = (0..=order).map(|i| self.coeffs[i].clone() - rhs.coeffs[i].clone()).collect();
        EpsSeries { coeffs }
    }
}

impl<S: Scalar> Mul for &EpsSeries<S> {
    type Output = EpsSeries<S>;
    fn mul(self, rhs: Self) -> EpsSeries<S> {
        let order = self.common_order(rhs);
        let mut out = EpsSeries::<S>::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(order + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j] = out.coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        out
    }
}

impl<S: Scalar> Neg for &EpsSeries<S> {
    type Output = EpsSeries<S>;
    fn neg(self) -> EpsSeries<S> {
        EpsSeries { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }
}

impl<S: Scalar> fmt::Display for EpsSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·ε")?,
                _ => write!(f, "{c}·ε^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<S: Scalar> Coeff for EpsSeries<S> {
    type Scalar = S;
    type Ctx = usize;

    fn ctx(&self) -> usize {
        self.order()
    }

    fn zero(order: &usize) -> Self {
        EpsSeries::zero(*order)
    }

    fn from_scalar(s: S, order: &usize) -> Self {
        EpsSeries::constant(s, *order)
    }

    fn is_zero(&self) -> bool {
        EpsSeries::is_zero(self)
    }

    fn add_assign(&mut self, rhs: &Self) {
        let order = self.common_order(rhs);
        self.coeffs.truncate(order + 1);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a = a.clone() + b.clone();
        }
    }

    fn sub_assign(&mut self, rhs: &Self) {
        let order = self.common_order(rhs);
        self.coeffs.truncate(order + 1);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a = a.clone() - b.clone();
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn scale(&self, s: &S) -> Self {
        EpsSeries::scale(self, s)
    }

    fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}
