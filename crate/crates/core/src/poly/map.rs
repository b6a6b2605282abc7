//! Polynomial maps `ℝ^d → ℝ^d` used as changes of variables.

use super::coeff::Coeff;
use super::multi_index::MultiIndex;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap<C: Coeff> {
    components: Vec<Polynomial<C>>,
    identity_part: bool,
}

impl<C: Coeff> PolyMap<C> {
    pub fn new(components: Vec<Polynomial<C>>) -> Result<Self> {
        let dim = components.len();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
        }
        let identity_part = Self::detect_identity_part(&components);
        Ok(Self { components, identity_part })
    }

    pub fn identity(dim: usize, max_degree: usize, ctx: C::Ctx) -> Self {
        let components = (0..dim).map(|i| Polynomial::variable(dim, max_degree, i, ctx.clone())).collect();
        Self { components, identity_part: true }
    }

    /// `x ↦ x + perturbation(x)`.
    pub fn identity_plus(perturbation: Vec<Polynomial<C>>) -> Result<Self> {
        let dim = perturbation.len();
        let comps = perturbation
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let id = Polynomial::variable(dim, p.max_degree(), i, p.ctx().clone());
                id.add(&p)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    fn detect_identity_part(components: &[Polynomial<C>]) -> bool {
        let dim = components.len();
        let Some(first) = components.first() else {
            return true;
        };
        let one = C::from_scalar(<C::Scalar as num_traits::One>::one(), first.ctx());
        components.iter().enumerate().all(|(i, comp)| {
            comp.coeff(&MultiIndex::zero(dim)).is_none()
                && (0..dim).all(|j| {
                    let c = comp.coeff(&MultiIndex::unit(dim, j));
                    if i == j {
                        c == Some(&one)
                    } else {
                        c.is_none()
                    }
                })
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Polynomial<C> {
        &self.components[i]
    }

    pub fn components(&self) -> &[Polynomial<C>] {
        &self.components
    }

    /// Whether component `i` is `x_i` plus terms of degree ≥ 2.
    pub fn identity_part(&self) -> bool {
        self.identity_part
    }

    /// `map(x) − x`.
    pub fn perturbation(&self) -> Result<Vec<Polynomial<C>>> {
        let dim = self.dim();
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| c.sub(&Polynomial::variable(dim, c.max_degree(), i, c.ctx().clone())))
            .collect()
    }

    pub fn eval(&self, x: &[C::Scalar]) -> Result<Vec<C>> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Jacobian entries `∂ map_i / ∂ x_j`, row-major.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial<C>>> {
        self.components.iter().map(|c| c.gradient()).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.components.iter().map(Polynomial::max_magnitude).fold(0.0, f64::max)
    }

    pub fn total_terms(&self) -> usize {
        self.components.iter().map(Polynomial::len).sum()
    }
}

/// `s ↦ a(b(s))`, truncated at `degree_cap`.
pub fn compose_maps<C: Coeff>(a: &PolyMap<C>, b: &PolyMap<C>, degree_cap: usize) -> Result<PolyMap<C>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let comps = a.components.iter().map(|c| c.compose(b, degree_cap)).collect::<Result<Vec<_>>>()?;
    PolyMap::new(comps)
}
