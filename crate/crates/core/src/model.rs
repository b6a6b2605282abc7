//! Standardized problem instance: derivative tensors at the minimizer.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::poly::{MultiIndex, Polynomial, SymTensor};
use crate::scalar::Scalar;

/// Derivative data of a standardized pair `(f, g)`.
///
/// Implicitly `f(0) = 0`, `∇f(0) = 0`, `∇²f(0) = I_d` and `g(0) = 1`; those are
/// not stored. `f_tensors` holds `∇^k f(0)` for `3 ≤ k ≤ 2L+1` and
/// `log_g_tensors` holds `∇^k log g(0)` for `1 ≤ k ≤ 2L−1`. Missing orders
/// are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<S> {
    dim: usize,
    order: usize,
    f_tensors: BTreeMap<usize, SymTensor<S>>,
    log_g_tensors: BTreeMap<usize, SymTensor<S>>,
    label: String,
}

impl<S: Scalar> Model<S> {
    /// Pure Gaussian model (all tensors zero) of dimension `dim` and order bound `order` (= L).
    pub fn new(dim: usize, order: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if order == 0 {
            return Err(Error::InvalidModel("order bound L must be at least 1".into()));
        }
        Ok(Self { dim, order, f_tensors: BTreeMap::new(), log_g_tensors: BTreeMap::new(), label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The order bound `L`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn max_f_order(&self) -> usize {
        2 * self.order + 1
    }

    pub fn max_log_g_order(&self) -> usize {
        2 * self.order - 1
    }

    fn check_tensor(&self, k: usize, t: &SymTensor<S>, lo: usize, hi: usize, what: &str) -> Result<()> {
        if k < lo || k > hi {
            return Err(Error::InvalidModel(format!("{what} order {k} outside {lo}..={hi} for L = {}", self.order)));
        }
        if t.order() != k {
            return Err(Error::InvalidModel(format!("{what} tensor declared as order {k} has order {}", t.order())));
        }
        if t.dim() != self.dim {
            return Err(Error::InvalidModel(format!(
                "{what} tensor of order {k} has dimension {}, model has {}",
                t.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Sets `∇^k f(0)`.
    pub fn set_f_tensor(&mut self, k: usize, t: SymTensor<S>) -> Result<()> {
        self.check_tensor(k, &t, 3, self.max_f_order(), "f")?;
        self.f_tensors.insert(k, t);
        Ok(())
    }

    /// Sets `∇^k log g(0)`.
    pub fn set_log_g_tensor(&mut self, k: usize, t: SymTensor<S>) -> Result<()> {
        self.check_tensor(k, &t, 1, self.max_log_g_order(), "log g")?;
        self.log_g_tensors.insert(k, t);
        Ok(())
    }

    pub fn with_f_tensor(mut self, k: usize, t: SymTensor<S>) -> Result<Self> {
        self.set_f_tensor(k, t)?;
        Ok(self)
    }

    pub fn with_log_g_tensor(mut self, k: usize, t: SymTensor<S>) -> Result<Self> {
        self.set_log_g_tensor(k, t)?;
        Ok(self)
    }

    pub fn f_tensor(&self, k: usize) -> Option<&SymTensor<S>> {
        self.f_tensors.get(&k)
    }

    pub fn log_g_tensor(&self, k: usize) -> Option<&SymTensor<S>> {
        self.log_g_tensors.get(&k)
    }

    pub fn f_tensor_or_zero(&self, k: usize) -> SymTensor<S> {
        self.f_tensors.get(&k).cloned().unwrap_or_else(|| SymTensor::zeros(k, self.dim))
    }

    pub fn log_g_tensor_or_zero(&self, k: usize) -> SymTensor<S> {
        self.log_g_tensors.get(&k).cloned().unwrap_or_else(|| SymTensor::zeros(k, self.dim))
    }

    pub fn f_tensors(&self) -> impl Iterator<Item = (usize, &SymTensor<S>)> {
        self.f_tensors.iter().map(|(k, t)| (*k, t))
    }

    pub fn log_g_tensors(&self) -> impl Iterator<Item = (usize, &SymTensor<S>)> {
        self.log_g_tensors.iter().map(|(k, t)| (*k, t))
    }

    /// True when every stored tensor is zero (pure Gaussian).
    pub fn is_degenerate(&self) -> bool {
        self.f_tensors.values().chain(self.log_g_tensors.values()).all(SymTensor::is_zero)
    }

    /// Largest stored tensor entry, in magnitude.
    pub fn max_entry(&self) -> f64 {
        self.f_tensors
            .values()
            .chain(self.log_g_tensors.values())
            .flat_map(|t| t.classes().map(|(_, v)| v.magnitude()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    /// Same model with a smaller order bound; tensors beyond the new range are dropped.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order {
            return Err(Error::InvalidModel(format!(
                "cannot truncate a model of order {} to order {order}",
                self.order
            )));
        }
        let mut out = Self::new(self.dim, order, self.label.clone())?;
        for (k, t) in &self.f_tensors {
            if *k <= 2 * order + 1 {
                out.f_tensors.insert(*k, t.clone());
            }
        }
        for (k, t) in &self.log_g_tensors {
            if *k < 2 * order {
                out.log_g_tensors.insert(*k, t.clone());
            }
        }
        Ok(out)
    }

    /// `f_{2L+1}(x) = ½‖x‖² + Σ_{k=3}^{2L+1} ∇^k f(0)[x^{⊗k}] / k!`.
    pub fn taylor_f(&self) -> Polynomial<S> {
        let cap = self.max_f_order();
        let mut p = Polynomial::zero(self.dim, cap, ());
        for i in 0..self.dim {
            p.add_term(MultiIndex::from_index_tuple(self.dim, &[i, i]), S::ratio(1, 2));
        }
        let mut fact = S::one();
        for k in 1..=cap {
            fact = fact * S::from_int(k as i64);
            if let Some(t) = self.f_tensors.get(&k) {
                for (m, c) in t.to_poly().terms() {
                    p.add_term(m.clone(), c.clone() / fact.clone());
                }
            }
        }
        p
    }

    /// `Σ_{k=1}^{2L−1} ∇^k log g(0)[x^{⊗k}] / k!`.
    pub fn taylor_log_g(&self) -> Polynomial<S> {
        let cap = self.max_log_g_order();
        let mut p = Polynomial::zero(self.dim, cap, ());
        let mut fact = S::one();
        for k in 1..=cap {
            fact = fact * S::from_int(k as i64);
            if let Some(t) = self.log_g_tensors.get(&k) {
                for (m, c) in t.to_poly().terms() {
                    p.add_term(m.clone(), c.clone() / fact.clone());
                }
            }
        }
        p
    }

    /// Converts every tensor entry to another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Model<T> {
        Model {
            dim: self.dim,
            order: self.order,
            f_tensors: self.f_tensors.iter().map(|(k, t)| (*k, t.map(&f))).collect(),
            log_g_tensors: self.log_g_tensors.iter().map(|(k, t)| (*k, t.map(&f))).collect(),
            label: self.label.clone(),
        }
    }
}
