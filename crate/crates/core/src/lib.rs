//! Higher-order Laplace expansions of `log ∫ g e^{−λf}` in the dimension-aware regime.
//!
//! Two independent routes produce the coefficients `b_k` of
//! `log I(λ) ≈ Σ_{k<L} b_k λ^{−k}`: [`cumulant::expand`] enumerates joint
//! cumulants of Gaussian polynomials, [`quadratize::run_pipeline`] quadratizes
//! the exponent by changes of variables. [`oracle`] evaluates `log I(λ)`
//! numerically for end-to-end checks.

pub mod cumulant;
pub mod error;
pub mod expansion;
pub mod gaussian;
pub mod model;
pub mod models;
pub mod oracle;
pub mod poly;
pub mod quadratize;
pub mod scalar;

pub use error::{Error, Result};
pub use expansion::{max_relative_discrepancy, relative_discrepancy, Diagnostics, ExpansionResult, Path};
pub use model::Model;
pub use models::{logreg_model, quartic_model, random_poly_model, LaplaceIntegrand, Link, LogisticProblem};
pub use oracle::{
    oracle_ghq, oracle_mc, oracle_radial, remainder_sweep, OracleChoice, OracleEstimate, OracleMethod, SlopeFit,
    SweepReport, SweepRow,
};
pub use poly::{
    compose, compose_maps, lower_slot, poly_multiply, sorted_tuples, symmetrize, tensor_to_poly, Coeff, EpsSeries,
    MultiIndex, PolyMap, Polynomial, SymTensor,
};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Poly = Polynomial<f64>;
pub type Series = EpsSeries<f64>;
pub type Tensor = SymTensor<f64>;
pub type ModelF64 = Model<f64>;
pub type ModelF32 = Model<f32>;
pub type ModelExact = Model<Rational>;
