use std::fmt;
use std::time::Duration;

/// Which algorithm produced a set of coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Path {
    Cumulant,
    Quadratize,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::Cumulant => "cumulant",
            Path::Quadratize => "quadratize",
        })
    }
}

/// Bookkeeping attached to an [`ExpansionResult`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Cumulant path: number of α-terms per coefficient.
    pub term_counts: Vec<usize>,
    /// Cumulant path: per-coefficient wall time. Quadratizer: per-stage wall time.
    pub timings: Vec<Duration>,
    /// Cumulant path: the α multi-indices of each coefficient, in summation order.
    pub alpha_order: Vec<Vec<Vec<usize>>>,
    /// Quadratizer: monomial count of the exponent after each stage.
    pub stage_monomials: Vec<usize>,
    /// Relative gap between the enumerated and closed-form `b₁`.
    pub b1_closed_form_discrepancy: Option<f64>,
    pub notes: Vec<String>,
}

/// Coefficients `b₁ … b_{L−1}` of `log I(λ) ≈ Σ b_k λ^{−k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult<S> {
    pub coefficients: Vec<S>,
    pub path: Path,
    pub diagnostics: Diagnostics,
}

impl<S: crate::Scalar> ExpansionResult<S> {
    /// `Σ_k b_k λ^{−k}`.
    pub fn log_expansion(&self, lambda: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_f64().unwrap_or(f64::NAN) * lambda.powi(-(i as i32 + 1)))
            .sum()
    }
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_discrepancy(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest [`relative_discrepancy`] across two coefficient lists.
pub fn max_relative_discrepancy<S: crate::Scalar>(a: &[S], b: &[S], floor: f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| relative_discrepancy(x.to_f64().unwrap_or(f64::NAN), y.to_f64().unwrap_or(f64::NAN), floor))
        .fold(0.0, f64::max)
}
