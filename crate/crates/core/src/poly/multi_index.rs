use std::fmt;

use smallvec::SmallVec;

/// Exponent vector of a monomial `x₁^{α₁}⋯x_d^{α_d}`.
///
/// Ordering is lexicographic on the exponents, which fixes the iteration
/// order of polynomial terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(SmallVec<[u16; 6]>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(SmallVec::from_elem(0, dim))
    }

    pub fn from_exponents(exponents: &[u16]) -> Self {
        Self(SmallVec::from_slice(exponents))
    }

    /// Unit exponent on coordinate `i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut m = Self::zero(dim);
        m.0[i] = 1;
        m
    }

    /// Exponent vector counting occurrences of each index in `tuple`.
    pub fn from_index_tuple(dim: usize, tuple: &[usize]) -> Self {
        let mut m = Self::zero(dim);
        for &i in tuple {
            m.0[i] += 1;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u16 {
        self.0[i]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Exponents with one factor of `x_i` removed, if present.
    pub fn lower(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut m = self.clone();
        m.0[i] -= 1;
        Some(m)
    }

    /// The sorted index tuple `(i, …, i, j, …)` of length `degree`.
    pub fn to_index_tuple(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree());
        for (i, &e) in self.0.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, e as usize));
        }
        out
    }

    /// `k! / (α₁! ⋯ α_d!)`: number of index tuples in this permutation class.
    pub fn multinomial(&self) -> u128 {
        let mut out: u128 = 1;
        let mut n: u128 = 0;
        for &e in &self.0 {
            for j in 1..=e as u128 {
                n += 1;
                out = out * n / j;
            }
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|e| e % 2 == 0)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}
