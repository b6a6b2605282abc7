//! Sparse multivariate polynomials with a pluggable coefficient ring.

use std::collections::BTreeMap;
use std::fmt;

use super::coeff::Coeff;
use super::map::PolyMap;
use super::multi_index::MultiIndex;
use super::series::EpsSeries;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Polynomial in `dim` variables truncated at total degree `max_degree`.
///
/// Terms are kept in a `BTreeMap` keyed by exponent vector, so iteration and
/// serialization are lexicographic. Zero coefficients are never stored
/// (exact zero only).
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C: Coeff> {
    dim: usize,
    max_degree: usize,
    ctx: C::Ctx,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(dim: usize, max_degree: usize, ctx: C::Ctx) -> Self {
        Self { dim, max_degree, ctx, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, max_degree: usize, c: C) -> Self {
        let mut p = Self::zero(dim, max_degree, c.ctx());
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate polynomial `x_i`.
    pub fn variable(dim: usize, max_degree: usize, i: usize, ctx: C::Ctx) -> Self {
        let one = C::from_scalar(<C::Scalar as num_traits::One>::one(), &ctx);
        let mut p = Self::zero(dim, max_degree, ctx);
        p.add_term(MultiIndex::unit(dim, i), one);
        p
    }

    pub fn from_terms<I>(dim: usize, max_degree: usize, ctx: C::Ctx, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, C)>,
    {
        let mut p = Self::zero(dim, max_degree, ctx);
        for (m, c) in terms {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &MultiIndex) -> Option<&C> {
        self.terms.get(m)
    }

    /// Coefficient of `m`, zero if absent.
    pub fn coeff_or_zero(&self, m: &MultiIndex) -> C {
        self.terms.get(m).cloned().unwrap_or_else(|| C::zero(&self.ctx))
    }

    /// Highest total degree among stored terms.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// Lowest total degree among stored terms.
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).min()
    }

    /// Largest coefficient magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(Coeff::max_magnitude).fold(0.0, f64::max)
    }

    /// Accumulates `c·x^m`, respecting the degree cap and zero pruning.
    pub fn add_term(&mut self, m: MultiIndex, c: C) {
        if m.degree() > self.max_degree || c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                o.get_mut().add_assign(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Overwrites the coefficient of `m` (removing it when `c` is zero).
    pub fn set_term(&mut self, m: MultiIndex, c: C) {
        if c.is_zero() {
            self.terms.remove(&m);
        } else if m.degree() <= self.max_degree {
            self.terms.insert(m, c);
        }
    }

    pub fn remove_term(&mut self, m: &MultiIndex) -> Option<C> {
        self.terms.remove(m)
    }

    /// Keeps the terms for which `keep` returns true.
    pub fn retain(&mut self, mut keep: impl FnMut(&MultiIndex, &C) -> bool) {
        self.terms.retain(|m, c| keep(m, c));
    }

    /// Rewrites every coefficient in place; terms that become zero are dropped.
    pub fn update_coeffs(&mut self, mut f: impl FnMut(&MultiIndex, &mut C)) {
        for (m, c) in self.terms.iter_mut() {
            f(m, c);
        }
        self.terms.retain(|_, c| !c.is_zero());
    }

    /// Same polynomial with a different degree cap (terms above it dropped).
    pub fn with_max_degree(&self, max_degree: usize) -> Self {
        let mut p = self.clone();
        p.max_degree = max_degree;
        p.terms.retain(|m, _| m.degree() <= max_degree);
        p
    }

    pub fn homogeneous_part(&self, degree: usize) -> Self {
        let mut p = Self::zero(self.dim, self.max_degree, self.ctx.clone());
        for (m, c) in self.terms.iter().filter(|(m, _)| m.degree() == degree) {
            p.terms.insert(m.clone(), c.clone());
        }
        p
    }

    pub fn map_coeffs<D: Coeff>(&self, ctx: D::Ctx, mut f: impl FnMut(&C) -> D) -> Polynomial<D> {
        let mut p = Polynomial::zero(self.dim, self.max_degree, ctx);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), f(c));
        }
        p
    }

    fn check_dim(&self, other_dim: usize) -> Result<()> {
        if self.dim != other_dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other_dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        out.max_degree = self.max_degree.max(other.max_degree);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, s: &C::Scalar) -> Self {
        let mut out = self.clone();
        out.update_coeffs(|_, c| *c = c.scale(s));
        out
    }

    /// Multiplies every coefficient by a ring element.
    pub fn mul_coeff(&self, k: &C) -> Self {
        let mut out = self.clone();
        out.update_coeffs(|_, c| *c = k.mul(c));
        out
    }

    /// Product truncated at `degree_cap`.
    pub fn multiply(&self, other: &Self, degree_cap: usize) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Self::zero(self.dim, degree_cap, self.ctx.clone());
        let mut right: Vec<(&MultiIndex, usize, &C)> = other.terms.iter().map(|(m, c)| (m, m.degree(), c)).collect();
        right.sort_by_key(|(_, d, _)| *d);
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if da > degree_cap {
                continue;
            }
            for (mb, db, cb) in &right {
                if da + db > degree_cap {
                    break;
                }
                out.add_term(ma.add(mb), ca.mul(cb));
            }
        }
        Ok(out)
    }

    /// `self^k` truncated at `degree_cap`.
    pub fn pow(&self, k: u32, degree_cap: usize) -> Result<Self> {
        let one = C::from_scalar(<C::Scalar as num_traits::One>::one(), &self.ctx);
        let mut acc = Self::constant(self.dim, degree_cap, one);
        for _ in 0..k {
            acc = acc.multiply(self, degree_cap)?;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim, self.max_degree, self.ctx.clone());
        for (m, c) in &self.terms {
            if let Some(lower) = m.lower(i) {
                let e = m.get(i) as i64;
                out.add_term(lower, c.scale(&C::Scalar::from_int(e)));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Evaluates at a concrete point, returning a value in the coefficient ring.
    pub fn eval(&self, x: &[C::Scalar]) -> Result<C> {
        self.check_dim(x.len())?;
        let mut acc = C::zero(&self.ctx);
        for (m, c) in &self.terms {
            let mut mono = <C::Scalar as num_traits::One>::one();
            for (xi, &e) in x.iter().zip(m.exponents()) {
                for _ in 0..e {
                    mono = mono * xi.clone();
                }
            }
            acc.add_assign(&c.scale(&mono));
        }
        Ok(acc)
    }

    /// `self ∘ map`, with every monomial above `degree_cap` discarded.
    pub fn compose(&self, map: &PolyMap<C>, degree_cap: usize) -> Result<Self> {
        self.check_dim(map.dim())?;
        let one = C::from_scalar(<C::Scalar as num_traits::One>::one(), &self.ctx);
        // powers[i][e] = map_i^e, built on demand up to the largest exponent used.
        let mut max_exp = vec![0u16; self.dim];
        for m in self.terms.keys() {
            for (i, &e) in m.exponents().iter().enumerate() {
                max_exp[i] = max_exp[i].max(e);
            }
        }
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(self.dim);
        for (i, &top) in max_exp.iter().enumerate() {
            let comp = map.component(i).with_max_degree(degree_cap);
            let mut row = vec![Self::constant(self.dim, degree_cap, one.clone())];
            for e in 1..=top as usize {
                let next = row[e - 1].multiply(&comp, degree_cap)?;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Self::zero(self.dim, degree_cap, self.ctx.clone());
        for (m, c) in &self.terms {
            let mut term = Self::constant(self.dim, degree_cap, c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = term.multiply(&powers[i][e as usize], degree_cap)?;
                    if term.is_zero() {
                        break;
                    }
                }
            }
            for (mm, cc) in term.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }
}

impl<S: Scalar> Polynomial<S> {
    /// Embeds scalar coefficients as ε-constant series of the given order.
    pub fn lift(&self, order: usize) -> Polynomial<EpsSeries<S>> {
        self.map_coeffs(order, |c| EpsSeries::constant(c.clone(), order))
    }
}

impl<S: Scalar> Polynomial<EpsSeries<S>> {
    /// Scalar polynomial formed by the `ε^k` coefficient of every term.
    pub fn eps_component(&self, k: usize) -> Polynomial<S> {
        self.map_coeffs((), |c| c.coeff(k))
    }

    /// Numerical evaluation at concrete `(ε, x)`.
    pub fn eval_at(&self, eps: &S, x: &[S]) -> Result<S> {
        Ok(self.eval(x)?.eval(eps))
    }
}

/// `p · q` truncated at `degree_cap`.
pub fn poly_multiply<C: Coeff>(p: &Polynomial<C>, q: &Polynomial<C>, degree_cap: usize) -> Result<Polynomial<C>> {
    p.multiply(q, degree_cap)
}

/// `p ∘ m` truncated at `degree_cap`.
pub fn compose<C: Coeff>(p: &Polynomial<C>, m: &PolyMap<C>, degree_cap: usize) -> Result<Polynomial<C>> {
    p.compose(m, degree_cap)
}

impl<C: Coeff + fmt::Display> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &e) in m.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}
