//! Symmetric multilinear forms stored one value per permutation class.

use std::collections::HashMap;

use super::multi_index::MultiIndex;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric tensor of order `k` on `ℝ^d`.
///
/// Values are stored densely, one per nondecreasing index tuple
/// `i₁ ≤ … ≤ i_k` (0-based), in lexicographic order; lookups by any
/// permutation of a tuple hit the same slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<S> {
    order: usize,
    dim: usize,
    values: Vec<S>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: usize = 1;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Number of nondecreasing tuples of length `len` with entries in `lo..dim`.
fn multisets(dim: usize, lo: usize, len: usize) -> usize {
    if len == 0 {
        return 1;
    }
    if lo >= dim {
        return 0;
    }
    binomial(dim - lo + len - 1, len)
}

/// Advances a nondecreasing tuple to its lexicographic successor.
fn next_sorted(tuple: &mut [usize], dim: usize) -> bool {
    let k = tuple.len();
    for pos in (0..k).rev() {
        if tuple[pos] + 1 < dim {
            let v = tuple[pos] + 1;
            for t in tuple.iter_mut().skip(pos) {
                *t = v;
            }
            return true;
        }
    }
    false
}

/// All nondecreasing index tuples of length `order` over `0..dim`.
pub fn sorted_tuples(order: usize, dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(multisets(dim, 0, order));
    let mut t = vec![0usize; order];
    loop {
        out.push(t.clone());
        if !next_sorted(&mut t, dim) {
            break;
        }
    }
    out
}

impl<S: Scalar> SymTensor<S> {
    pub fn zeros(order: usize, dim: usize) -> Self {
        assert!(dim >= 1, "tensor dimension must be positive");
        Self { order, dim, values: vec![S::zero(); multisets(dim, 0, order)] }
    }

    /// Builds a tensor from one representative per permutation class.
    ///
    /// Indices are 0-based. Two entries that are permutations of each other are
    /// rejected, as are wrong-length tuples and out-of-range indices.
    pub fn from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        let mut t = Self::zeros(order, dim);
        let mut seen: HashMap<usize, Vec<usize>> = HashMap::new();
        for (tuple, value) in entries {
            if tuple.len() != order {
                return Err(Error::WrongOrder { found: tuple.len(), tuple, order });
            }
            if let Some(&bad) = tuple.iter().find(|&&i| i >= dim) {
                return Err(Error::IndexOutOfRange { index: bad, dim });
            }
            let mut sorted = tuple.clone();
            sorted.sort_unstable();
            let slot = t.rank(&sorted);
            if let Some(prev) = seen.insert(slot, tuple.clone()) {
                return Err(Error::DuplicateClass { first: prev, second: tuple });
            }
            t.values[slot] = value;
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.values.len()
    }

    fn rank(&self, sorted: &[usize]) -> usize {
        let mut r = 0;
        let mut lo = 0;
        let k = sorted.len();
        for (pos, &v) in sorted.iter().enumerate() {
            for smaller in lo..v {
                r += multisets(self.dim, smaller, k - pos - 1);
            }
            lo = v;
        }
        r
    }

    /// Entry at an arbitrary (not necessarily sorted) index tuple.
    pub fn get(&self, index: &[usize]) -> S {
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        self.values[self.rank(&sorted)].clone()
    }

    pub fn set(&mut self, index: &[usize], value: S) {
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        let slot = self.rank(&sorted);
        self.values[slot] = value;
    }

    /// `(sorted tuple, value)` for every class, lexicographic order.
    pub fn classes(&self) -> impl Iterator<Item = (Vec<usize>, &S)> {
        sorted_tuples(self.order, self.dim).into_iter().zip(self.values.iter())
    }

    /// Classes with a nonzero value.
    pub fn nonzero_classes(&self) -> Vec<(Vec<usize>, S)> {
        self.classes().filter(|(_, v)| !v.is_zero()).map(|(t, v)| (t, v.clone())).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { order: self.order, dim: self.dim, values: self.values.iter().map(|v| v.clone() * s.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.order != other.order {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Self { order: self.order, dim: self.dim, values })
    }

    /// `T[v₁, …, v_k]` on arbitrary vectors, summing over all `d^k` index tuples.
    pub fn eval_multilinear(&self, vectors: &[&[S]]) -> Result<S> {
        if vectors.len() != self.order {
            return Err(Error::WrongOrder { tuple: vec![], order: self.order, found: vectors.len() });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        let mut acc = S::zero();
        let mut idx = vec![0usize; self.order];
        loop {
            let mut prod = self.get(&idx);
            if !prod.is_zero() {
                for (slot, &i) in idx.iter().enumerate() {
                    prod = prod * vectors[slot][i].clone();
                }
                acc = acc + prod;
            }
            // odometer over {0..d}^k
            let mut pos = 0;
            loop {
                if pos == self.order {
                    return Ok(acc);
                }
                idx[pos] += 1;
                if idx[pos] < self.dim {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    /// `T[x^{⊗k}]`.
    pub fn eval_power(&self, x: &[S]) -> Result<S> {
        self.to_poly().eval(x)
    }

    /// The homogeneous polynomial `x ↦ T[x^{⊗k}]`; the coefficient of `x^α`
    /// is the class value times `k!/(α₁!⋯α_d!)`.
    pub fn to_poly(&self) -> Polynomial<S> {
        let mut p = Polynomial::zero(self.dim, self.order, ());
        for (tuple, v) in self.classes() {
            if v.is_zero() {
                continue;
            }
            let m = MultiIndex::from_index_tuple(self.dim, &tuple);
            let count = S::from_u128(m.multinomial()).expect("multinomial fits scalar");
            p.add_term(m, v.clone() * count);
        }
        p
    }

    /// Inverse of [`to_poly`](Self::to_poly) for a homogeneous polynomial.
    pub fn from_homogeneous_poly(p: &Polynomial<S>, order: usize) -> Result<Self> {
        let mut t = Self::zeros(order, p.dim());
        for (m, c) in p.terms() {
            if m.degree() != order {
                return Err(Error::Structure(format!(
                    "monomial {m:?} has degree {}, expected homogeneous degree {order}",
                    m.degree()
                )));
            }
            let count = S::from_u128(m.multinomial()).expect("multinomial fits scalar");
            t.set(&m.to_index_tuple(), c.clone() / count);
        }
        Ok(t)
    }

    /// Splits off the last slot: component `u` is the order-`(k−1)` tensor
    /// `T[·, …, ·, e_u]`, so `⟨result(x), u⟩ = T[x^{⊗(k−1)}, u]`.
    pub fn lower_slot(&self) -> Result<Vec<Self>> {
        if self.order == 0 {
            return Err(Error::OutOfRange { what: "tensor order", value: 0, allowed: ">= 1".into() });
        }
        let mut out = vec![Self::zeros(self.order - 1, self.dim); self.dim];
        for (u, comp) in out.iter_mut().enumerate() {
            for (slot, tuple) in sorted_tuples(self.order - 1, self.dim).into_iter().enumerate() {
                let mut full = tuple;
                full.push(u);
                comp.values[slot] = self.get(&full);
            }
        }
        Ok(out)
    }

    /// Contraction of the last two slots: `(tr T)[i₁…i_{k−2}] = Σ_j T[i₁…i_{k−2}, j, j]`.
    pub fn trace_last_pair(&self) -> Result<Self> {
        if self.order < 2 {
            return Err(Error::OutOfRange { what: "tensor order", value: self.order as i64, allowed: ">= 2".into() });
        }
        let mut out = Self::zeros(self.order - 2, self.dim);
        for (slot, tuple) in sorted_tuples(self.order - 2, self.dim).into_iter().enumerate() {
            let mut acc = S::zero();
            for j in 0..self.dim {
                let mut full = tuple.clone();
                full.push(j);
                full.push(j);
                acc = acc + self.get(&full);
            }
            out.values[slot] = acc;
        }
        Ok(out)
    }

    /// `Σ_{i₁…i_k} T[i₁…i_k]²` over all `d^k` index tuples.
    pub fn frobenius_sq(&self) -> S {
        let mut acc = S::zero();
        for (tuple, v) in self.classes() {
            let m = MultiIndex::from_index_tuple(self.dim, &tuple);
            let count = S::from_u128(m.multinomial()).expect("multinomial fits scalar");
            acc = acc + v.clone() * v.clone() * count;
        }
        acc
    }

    /// Value of an order-0 tensor.
    pub fn scalar_value(&self) -> S {
        self.values[0].clone()
    }

    /// Entries of an order-1 tensor as a vector.
    pub fn as_vector(&self) -> Vec<S> {
        (0..self.dim).map(|i| self.get(&[i])).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SymTensor<T> {
        SymTensor { order: self.order, dim: self.dim, values: self.values.iter().map(f).collect() }
    }
}

impl SymTensor<f64> {
    /// Power-iteration estimate of `sup_{‖u‖=1} |T[u^{⊗k}]|`.
    ///
    /// A lower bound in general; exact computation is intractable for k ≥ 3.
    pub fn op_norm_estimate(&self, restarts: usize, iterations: usize) -> f64 {
        if self.order == 0 {
            return self.scalar_value().abs();
        }
        let comps = match self.lower_slot() {
            Ok(c) => c,
            Err(_) => return 0.0,
        };
        let polys: Vec<_> = comps.iter().map(|c| c.to_poly()).collect();
        let mut best = 0.0f64;
        for r in 0..restarts.max(1) {
            // deterministic, spread-out starting directions
            let mut u: Vec<f64> =
                (0..self.dim).map(|i| ((i + 1) as f64 * (r as f64 + 1.0) * 0.7548776662).sin() + 0.1).collect();
            normalize(&mut u);
            for _ in 0..iterations {
                let mut next: Vec<f64> = polys.iter().map(|p| p.eval(&u).unwrap_or(0.0)).collect();
                let val: f64 = next.iter().zip(&u).map(|(a, b)| a * b).sum();
                best = best.max(val.abs());
                if val < 0.0 {
                    next.iter_mut().for_each(|v| *v = -*v);
                }
                if normalize(&mut next) == 0.0 {
                    break;
                }
                u = next;
            }
            best = best.max(self.eval_power(&u).unwrap_or(0.0).abs());
        }
        best
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Builds a symmetric tensor from per-class representatives; see
/// [`SymTensor::from_entries`].
pub fn symmetrize<S: Scalar>(raw_entries: Vec<(Vec<usize>, S)>, order: usize, dim: usize) -> Result<SymTensor<S>> {
    SymTensor::from_entries(order, dim, raw_entries)
}

/// `x ↦ T[x^{⊗k}]` as a polynomial.
pub fn tensor_to_poly<S: Scalar>(t: &SymTensor<S>) -> Polynomial<S> {
    t.to_poly()
}

/// See [`SymTensor::lower_slot`].
pub fn lower_slot<S: Scalar>(t: &SymTensor<S>) -> Result<Vec<SymTensor<S>>> {
    t.lower_slot()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_and_ranks() {
        let t = SymTensor::<f64>::zeros(3, 2);
        assert_eq!(t.num_classes(), 4);
        for (slot, tuple) in sorted_tuples(3, 2).iter().enumerate() {
            assert_eq!(t.rank(tuple), slot);
        }
        let t = SymTensor::<f64>::zeros(4, 3);
        assert_eq!(t.num_classes(), 15);
        for (slot, tuple) in sorted_tuples(4, 3).iter().enumerate() {
            assert_eq!(t.rank(tuple), slot);
        }
    }

    #[test]
    fn symmetrize_order3() {
        let t = symmetrize(vec![(vec![0, 0, 1], 0.5)], 3, 2).unwrap();
        assert_eq!(t.get(&[0, 0, 1]), 0.5);
        assert_eq!(t.get(&[0, 1, 0]), 0.5);
        assert_eq!(t.get(&[1, 0, 0]), 0.5);
        assert_eq!(t.get(&[1, 1, 0]), 0.0);
        assert_eq!(t.get(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn symmetrize_matrix() {
        let t = symmetrize(vec![(vec![0, 1], 1.0)], 2, 3).unwrap();
        assert_eq!(t.get(&[0, 1]), 1.0);
        assert_eq!(t.get(&[1, 0]), 1.0);
        assert_eq!(t.get(&[0, 0]), 0.0);
        assert_eq!(t.get(&[2, 1]), 0.0);
    }

    #[test]
    fn symmetrize_scalar_case() {
        let t = symmetrize(vec![(vec![0, 0, 0, 0], 1.0)], 4, 1).unwrap();
        assert_eq!(t.eval_power(&[2.0]).unwrap(), 16.0);
    }

    #[test]
    fn symmetrize_rejects_duplicates_and_range() {
        let err = symmetrize(vec![(vec![0, 1], 1.0), (vec![1, 0], 2.0)], 2, 2).unwrap_err();
        assert_eq!(err, Error::DuplicateClass { first: vec![0, 1], second: vec![1, 0] });
        assert!(matches!(symmetrize(vec![(vec![0, 2], 1.0)], 2, 2), Err(Error::IndexOutOfRange { index: 2, dim: 2 })));
        assert!(matches!(symmetrize(vec![(vec![0], 1.0)], 2, 2), Err(Error::WrongOrder { .. })));
    }

    #[test]
    fn half_identity_is_half_norm_squared() {
        let t = symmetrize((0..3).map(|i| (vec![i, i], 0.5)).collect(), 2, 3).unwrap();
        let p = t.to_poly();
        assert_eq!(p.len(), 3);
        for i in 0..3 {
            assert_eq!(p.coeff(&MultiIndex::unit(3, i).add(&MultiIndex::unit(3, i))), Some(&0.5));
        }
    }

    #[test]
    fn cubic_single_class_to_poly() {
        let c = 1.75;
        let t = symmetrize(vec![(vec![0, 0, 0], c)], 3, 2).unwrap();
        let p = t.to_poly();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&MultiIndex::from_exponents(&[3, 0])), Some(&c));
    }

    #[test]
    fn lower_slot_examples() {
        // identity matrix: result(x) = x
        let id = symmetrize(vec![(vec![0, 0], 1.0), (vec![1, 1], 1.0)], 2, 2).unwrap();
        let parts = id.lower_slot().unwrap();
        let x = [0.3, -0.8];
        for (u, part) in parts.iter().enumerate() {
            assert_eq!(part.eval_power(&x).unwrap(), x[u]);
        }
        // only class (1,1,2)=1 (1-based): result(x) = (2x₁x₂, x₁²)
        let t = symmetrize(vec![(vec![0, 0, 1], 1.0)], 3, 2).unwrap();
        let parts = t.lower_slot().unwrap();
        let x: [f64; 2] = [1.3, -0.4];
        assert!((parts[0].eval_power(&x).unwrap() - 2.0 * x[0] * x[1]).abs() < 1e-15);
        assert!((parts[1].eval_power(&x).unwrap() - x[0] * x[0]).abs() < 1e-15);
    }

    #[test]
    fn frobenius_counts_all_permutations() {
        let t = symmetrize(vec![(vec![0, 0, 1], 2.0)], 3, 2).unwrap();
        assert_eq!(t.frobenius_sq(), 12.0);
    }

    #[test]
    fn op_norm_of_identity() {
        let id = symmetrize((0..3).map(|i| (vec![i, i], 1.0)).collect(), 2, 3).unwrap();
        assert!((id.op_norm_estimate(3, 50) - 1.0).abs() < 1e-12);
    }
}
