//! Exact expectations under the standard Gaussian `N(0, I_d)` and the
//! first/third-order multivariate Hermite polynomials.
//!
//! With identity covariance, `E[Z^α]` factors over coordinates into
//! `∏ (α_i − 1)!!` (zero if any exponent is odd).

use crate::error::{Error, Result};
use crate::poly::{Coeff, MultiIndex, Polynomial};
use crate::scalar::Scalar;

/// Largest per-coordinate exponent accepted by [`moment`].
pub const MAX_MOMENT_EXPONENT: u32 = 60;

fn double_factorial_odd<S: Scalar>(e: u32) -> S {
    // (e − 1)!! for even e
    let mut acc = S::one();
    let mut k = e as i64 - 1;
    while k > 1 {
        acc = acc * S::from_int(k);
        k -= 2;
    }
    acc
}

/// `E[Z^α]` for `Z ~ N(0, I_d)`.
pub fn moment<S: Scalar>(alpha: &MultiIndex) -> Result<S> {
    let mut acc = S::one();
    for &e in alpha.exponents() {
        let e = e as u32;
        if e > MAX_MOMENT_EXPONENT {
            return Err(Error::MomentOverflow(e));
        }
        if e % 2 == 1 {
            return Ok(S::zero());
        }
        if e > 0 {
            acc = acc * double_factorial_odd::<S>(e);
        }
    }
    Ok(acc)
}

/// `E[p(Z)]`, returned in the polynomial's coefficient ring.
pub fn expect_poly<C: Coeff>(p: &Polynomial<C>) -> Result<C> {
    let mut acc = C::zero(p.ctx());
    for (m, c) in p.terms() {
        if !m.is_even() {
            continue;
        }
        let mu: C::Scalar = moment(m)?;
        acc.add_assign(&c.scale(&mu));
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HermiteKind {
    /// `H_i(x) = x_i`
    Single(usize),
    /// `H_{ijk}`, indices stored sorted.
    Triple([usize; 3]),
}

/// Index of a first- or third-order multivariate Hermite polynomial (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HermiteIndex {
    dim: usize,
    kind: HermiteKind,
}

impl HermiteIndex {
    pub fn single(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        Ok(Self { dim, kind: HermiteKind::Single(i) })
    }

    pub fn triple(dim: usize, i: usize, j: usize, k: usize) -> Result<Self> {
        let mut t = [i, j, k];
        if let Some(&bad) = t.iter().find(|&&v| v >= dim) {
            return Err(Error::IndexOutOfRange { index: bad, dim });
        }
        t.sort_unstable();
        Ok(Self { dim, kind: HermiteKind::Triple(t) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> HermiteKind {
        self.kind
    }
}

fn indicator<S: Scalar>(a: usize, b: usize) -> S {
    if a == b {
        S::one()
    } else {
        S::zero()
    }
}

/// `H(x)` evaluated directly from its defining formula.
pub fn hermite_eval<S: Scalar>(h: &HermiteIndex, x: &[S]) -> Result<S> {
    if x.len() != h.dim {
        return Err(Error::DimensionMismatch { expected: h.dim, found: x.len() });
    }
    Ok(match h.kind {
        HermiteKind::Single(i) => x[i].clone(),
        HermiteKind::Triple([i, j, k]) => {
            x[i].clone() * x[j].clone() * x[k].clone()
                - x[i].clone() * indicator::<S>(j, k)
                - x[j].clone() * indicator::<S>(i, k)
                - x[k].clone() * indicator::<S>(i, j)
        }
    })
}

/// `H` as a polynomial of degree 1 or 3.
pub fn hermite_poly<S: Scalar>(h: &HermiteIndex) -> Polynomial<S> {
    let d = h.dim;
    let mut p = Polynomial::zero(d, 3, ());
    match h.kind {
        HermiteKind::Single(i) => p.add_term(MultiIndex::unit(d, i), S::one()),
        HermiteKind::Triple([i, j, k]) => {
            p.add_term(MultiIndex::from_index_tuple(d, &[i, j, k]), S::one());
            for (a, b, c) in [(i, j, k), (j, i, k), (k, i, j)] {
                if b == c {
                    p.add_term(MultiIndex::unit(d, a), -S::one());
                }
            }
        }
    }
    p
}

/// `E[H(Z)²]`: 1 for first order; for a triple, 6 divided by the number of
/// distinct orderings of its indices (6, 2, 1 for 1, 2, 3 distinct values).
pub fn hermite_second_moment<S: Scalar>(h: &HermiteIndex) -> S {
    match h.kind {
        HermiteKind::Single(_) => S::one(),
        HermiteKind::Triple([i, j, k]) => {
            let arrangements = if i == j && j == k {
                1
            } else if i == j || j == k {
                3
            } else {
                6
            };
            S::ratio(6, arrangements)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: &[u16]) -> MultiIndex {
        MultiIndex::from_exponents(e)
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment::<f64>(&m(&[4])).unwrap(), 3.0);
        assert_eq!(moment::<f64>(&m(&[2, 2])).unwrap(), 1.0);
        assert_eq!(moment::<f64>(&m(&[1, 2])).unwrap(), 0.0);
        assert_eq!(moment::<f64>(&m(&[6, 0, 2])).unwrap(), 15.0);
        assert_eq!(moment::<f64>(&m(&[62])), Err(Error::MomentOverflow(62)));
    }

    #[test]
    fn norm_squared_expectation() {
        let d = 3;
        let mut p = Polynomial::<f64>::zero(d, 2, ());
        for i in 0..d {
            p.add_term(MultiIndex::from_index_tuple(d, &[i, i]), 1.0);
        }
        assert_eq!(expect_poly(&p).unwrap(), 3.0);
    }

    #[test]
    fn quartic_p2_expectation() {
        // p₂ = −‖x‖⁴/12 at d = 2: −(3 + 2 + 3)/12
        let p = Polynomial::<f64>::from_terms(
            2,
            4,
            (),
            [(m(&[4, 0]), -1.0 / 12.0), (m(&[2, 2]), -2.0 / 12.0), (m(&[0, 4]), -1.0 / 12.0)],
        )
        .unwrap();
        assert!((expect_poly(&p).unwrap() + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_closed_forms() {
        let x: [f64; 3] = [0.7, -1.3, 2.1];
        let h = HermiteIndex::triple(3, 1, 1, 1).unwrap();
        assert!((hermite_eval(&h, &x).unwrap() - (x[1].powi(3) - 3.0 * x[1])).abs() < 1e-14);
        let h = HermiteIndex::triple(3, 0, 2, 0).unwrap();
        assert!((hermite_eval(&h, &x).unwrap() - (x[0] * x[0] - 1.0) * x[2]).abs() < 1e-14);
        let h = HermiteIndex::triple(3, 2, 0, 1).unwrap();
        assert!((hermite_eval(&h, &x).unwrap() - x[0] * x[1] * x[2]).abs() < 1e-14);
    }

    #[test]
    fn hermite_poly_matches_direct_eval() {
        let x = [0.4, -0.9];
        for (i, j, k) in [(0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1)] {
            let h = HermiteIndex::triple(2, i, j, k).unwrap();
            let a = hermite_poly::<f64>(&h).eval(&x).unwrap();
            let b = hermite_eval(&h, &x).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn second_moments() {
        let d = 3;
        assert_eq!(hermite_second_moment::<f64>(&HermiteIndex::triple(d, 0, 0, 0).unwrap()), 6.0);
        assert_eq!(hermite_second_moment::<f64>(&HermiteIndex::triple(d, 0, 1, 0).unwrap()), 2.0);
        assert_eq!(hermite_second_moment::<f64>(&HermiteIndex::triple(d, 0, 1, 2).unwrap()), 1.0);
        assert_eq!(hermite_second_moment::<f64>(&HermiteIndex::single(d, 2).unwrap()), 1.0);
    }

    #[test]
    fn second_moment_agrees_with_expectation() {
        let d = 3;
        for h in [
            HermiteIndex::single(d, 1).unwrap(),
            HermiteIndex::triple(d, 2, 2, 2).unwrap(),
            HermiteIndex::triple(d, 0, 2, 2).unwrap(),
            HermiteIndex::triple(d, 0, 1, 2).unwrap(),
        ] {
            let p = hermite_poly::<f64>(&h);
            let sq = p.multiply(&p, 6).unwrap();
            assert_eq!(expect_poly(&sq).unwrap(), hermite_second_moment::<f64>(&h));
        }
    }

    #[test]
    fn reordered_triple_is_same_index() {
        assert_eq!(HermiteIndex::triple(4, 3, 1, 2).unwrap(), HermiteIndex::triple(4, 1, 2, 3).unwrap());
    }
}
