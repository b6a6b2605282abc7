//! Brute-force numerical values of `log I(λ)` and remainder sweeps.

use std::fmt;
use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cumulant;
use crate::error::{Error, Result};
use crate::models::LaplaceIntegrand;

/// Largest tensor grid [`oracle_ghq`] accepts.
pub const MAX_GRID_POINTS: usize = 10_000_000;
/// Log-difference below which two Gauss–Hermite grids count as converged.
pub const GHQ_CONVERGENCE_TOL: f64 = 1e-8;
/// Smallest sample count [`oracle_mc`] accepts.
pub const MIN_MC_SAMPLES: usize = 1000;
/// Upper end of the scaled radial integral `∫₀^S s^{d−1}(…) ds`.
pub const RADIAL_CUTOFF: f64 = 40.0;
const MC_BLOCK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleMethod {
    Radial,
    Ghq,
    Mc,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::Radial => "radial",
            OracleMethod::Ghq => "ghq",
            OracleMethod::Mc => "mc",
        })
    }
}

/// One numerical value of `log I(λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleEstimate {
    pub log_i: f64,
    /// Zero for deterministic quadrature; delta-method error of `log I` for Monte Carlo.
    pub std_error: f64,
    pub method: OracleMethod,
    pub lambda: f64,
    pub samples_or_nodes: usize,
    pub seed: Option<u64>,
    /// Gauss–Hermite only: whether a coarser companion grid agrees.
    pub converged: Option<bool>,
    /// Radial only: quadrature error estimate of the scaled integral.
    pub error_estimate: Option<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Oracle(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// Log importance weight `log g(x) − λ(f(x) − ½‖x‖²)` at `x = z/√λ`.
fn log_weight(m: &LaplaceIntegrand, lambda: f64, z: &[f64]) -> f64 {
    let s = lambda.sqrt();
    let x: Vec<f64> = z.iter().map(|v| v / s).collect();
    m.log_g(&x) - lambda * m.excess(&x)
}

/// Radial reduction `I = ∫₀^∞ s^{d−1}e^{−s²/2} w(s) ds / ∫₀^∞ s^{d−1}e^{−s²/2} ds`
/// with double-exponential quadrature on both integrals.
pub fn oracle_radial(m: &LaplaceIntegrand, lambda: f64, rel_tol: f64) -> Result<OracleEstimate> {
    check_lambda(lambda)?;
    if !m.exact_radial() {
        return Err(Error::Oracle("the radial oracle needs an integrand depending only on |x|".into()));
    }
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(Error::Oracle(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let d = m.dim();
    let p = d as i32 - 1;
    let base = |s: f64| s.powi(p) * (-0.5 * s * s).exp();
    let point = |s: f64| {
        let mut z = vec![0.0; d];
        z[0] = s;
        z
    };
    let weighted = |s: f64| base(s) * log_weight(m, lambda, &point(s)).exp();
    let integrate = |f: &dyn Fn(f64) -> f64| {
        let mut total = 0.0;
        let mut err = 0.0;
        for (a, b) in [(0.0, 4.0), (4.0, 12.0), (12.0, RADIAL_CUTOFF)] {
            let out = quadrature::double_exponential::integrate(f, a, b, rel_tol * 1e-2);
            total += out.integral;
            err += out.error_estimate;
        }
        (total, err)
    };
    let (num, num_err) = integrate(&weighted);
    let (den, den_err) = integrate(&base);
    if !(num.is_finite() && num > 0.0) {
        return Err(Error::Oracle(format!("radial integral is not a positive finite number ({num})")));
    }
    let rel_err = num_err / num + den_err / den;
    if rel_err > rel_tol {
        return Err(Error::Oracle(format!(
            "radial quadrature reached relative error {rel_err:e}, above the requested {rel_tol:e}"
        )));
    }
    Ok(OracleEstimate {
        log_i: num.ln() - den.ln(),
        std_error: 0.0,
        method: OracleMethod::Radial,
        lambda,
        samples_or_nodes: 0,
        seed: None,
        converged: None,
        error_estimate: Some(rel_err),
    })
}

/// Probabilists' Gauss–Hermite rule: nodes and log-weights for `E[h(Z)]`, `Z ~ N(0,1)`.
fn hermite_rule(nodes: usize) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(nodes).ok_or_else(|| Error::Oracle("nodes_per_dim must be positive".into()))?;
    let rule = GaussHermite::new(n);
    let pairs = rule.as_node_weight_pairs();
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    Ok(pairs.iter().map(|(x, w)| (std::f64::consts::SQRT_2 * x, (w / total).ln())).collect())
}

/// `log E[exp(h(Z))]`, `Z ~ N(0, I_d)`, on a tensor Gauss–Hermite grid.
pub fn ghq_log_expectation(d: usize, nodes: usize, h: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    let total = nodes
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::Oracle(format!("a {nodes}^{d} grid exceeds {MAX_GRID_POINTS} points")))?;
    let rule = hermite_rule(nodes)?;
    let terms: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut z = vec![0.0; d];
            let mut lw = 0.0;
            for zi in z.iter_mut() {
                let (x, w) = rule[flat % nodes];
                flat /= nodes;
                *zi = x;
                lw += w;
            }
            lw + h(&z)
        })
        .collect();
    if let Some(bad) = terms.iter().find(|t| t.is_nan() || **t == f64::INFINITY) {
        return Err(Error::Oracle(format!("non-finite Gauss-Hermite term {bad}")));
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok(top + sum.ln())
}

fn ghq_log_mean(m: &LaplaceIntegrand, lambda: f64, nodes: usize) -> Result<f64> {
    ghq_log_expectation(m.dim(), nodes, |z| log_weight(m, lambda, z))
}

/// Tensor-grid Gauss–Hermite value of `E_{N(0, λ⁻¹I)}[g e^{−λf + λ‖x‖²/2}]`.
///
/// A companion grid with two thirds of the nodes is also evaluated; the
/// estimate is flagged non-converged when the two differ by
/// [`GHQ_CONVERGENCE_TOL`] or more.
pub fn oracle_ghq(m: &LaplaceIntegrand, lambda: f64, nodes_per_dim: usize) -> Result<OracleEstimate> {
    check_lambda(lambda)?;
    let log_i = ghq_log_mean(m, lambda, nodes_per_dim)?;
    let companion = (2 * nodes_per_dim).div_ceil(3).max(1);
    let coarse = ghq_log_mean(m, lambda, companion)?;
    Ok(OracleEstimate {
        log_i,
        std_error: 0.0,
        method: OracleMethod::Ghq,
        lambda,
        samples_or_nodes: nodes_per_dim,
        seed: None,
        converged: Some((log_i - coarse).abs() < GHQ_CONVERGENCE_TOL),
        error_estimate: None,
    })
}

/// Importance sampling from `N(0, λ⁻¹I)`; blocks of samples use independent
/// ChaCha streams, so the estimate does not depend on the thread count.
pub fn oracle_mc(m: &LaplaceIntegrand, lambda: f64, samples: usize, seed: u64) -> Result<OracleEstimate> {
    check_lambda(lambda)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::Oracle(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}")));
    }
    let d = m.dim();
    let blocks = samples.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut z = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let w = log_weight(m, lambda, &z).exp();
                if !w.is_finite() {
                    let s = lambda.sqrt();
                    let x: Vec<f64> = z.iter().map(|v| v / s).collect();
                    return Err(Error::Oracle(format!("non-finite importance weight {w} at x = {x:?}")));
                }
                s1 += w;
                s2 += w * w;
            }
            Ok((s1, s2))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (c, e)| (a + c, b + e));
    let mean = s1 / n;
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::Oracle(format!("Monte Carlo mean {mean} is not positive")));
    }
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(OracleEstimate {
        log_i: mean.ln(),
        std_error: var.sqrt() / (mean * n.sqrt()),
        method: OracleMethod::Mc,
        lambda,
        samples_or_nodes: samples,
        seed: Some(seed),
        converged: None,
        error_estimate: None,
    })
}

/// Oracle selection with its tuning parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleChoice {
    Radial { rel_tol: f64 },
    Ghq { nodes_per_dim: usize },
    Mc { samples: usize, seed: u64 },
}

impl OracleChoice {
    pub fn method(&self) -> OracleMethod {
        match self {
            OracleChoice::Radial { .. } => OracleMethod::Radial,
            OracleChoice::Ghq { .. } => OracleMethod::Ghq,
            OracleChoice::Mc { .. } => OracleMethod::Mc,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, OracleChoice::Mc { .. })
    }

    /// Runs the oracle; Monte Carlo rows use the stream `seed + row`.
    pub fn estimate(&self, m: &LaplaceIntegrand, lambda: f64, row: usize) -> Result<OracleEstimate> {
        match *self {
            OracleChoice::Radial { rel_tol } => oracle_radial(m, lambda, rel_tol),
            OracleChoice::Ghq { nodes_per_dim } => oracle_ghq(m, lambda, nodes_per_dim),
            OracleChoice::Mc { samples, seed } => oracle_mc(m, lambda, samples, seed.wrapping_add(row as u64)),
        }
    }
}

/// One λ of a remainder sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub lambda: f64,
    pub order: usize,
    pub log_i_oracle: f64,
    pub log_i_expansion: f64,
    /// `log_i_oracle − log_i_expansion`.
    pub remainder: f64,
    pub oracle_std_error: f64,
    pub usable: bool,
}

/// Least-squares slope of `ln|remainder|` against `ln λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_error: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub coefficients: Vec<f64>,
    /// `None` when fewer than two rows are usable.
    pub fit: Option<SlopeFit>,
}

impl SweepReport {
    pub fn flagged_rows(&self) -> Vec<usize> {
        self.rows.iter().enumerate().filter(|(_, r)| !r.usable).map(|(i, _)| i).collect()
    }
}

/// Remainders below this are indistinguishable from quadrature rounding.
pub const DETERMINISTIC_FLOOR: f64 = 1e-14;

/// Ordinary least squares of `y` on `x` with the slope's standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Sweep(format!("need at least two matching points to fit a slope, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Sweep("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let std_error = if n > 2 {
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit { slope, std_error, intercept, points: n })
}

/// Checks a λ grid: at least three distinct positive finite values.
pub fn validate_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.len() < 3 {
        return Err(Error::Sweep(format!("need at least 3 lambda values, got {}", lambdas.len())));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Sweep(format!("lambda values must be positive and finite, got {l}")));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Sweep(format!("duplicate lambda value {}", w[0])));
    }
    Ok(())
}

/// `log I(λ) − Σ_{k<L} b_k λ^{−k}` over a λ grid, with the fitted decay exponent.
pub fn remainder_sweep(
    m: &LaplaceIntegrand,
    lambdas: &[f64],
    order: usize,
    oracle: OracleChoice,
) -> Result<SweepReport> {
    validate_lambdas(lambdas)?;
    let truncated = m.model().truncated(order)?;
    let coefficients = cumulant::expand(&truncated)?.coefficients;
    let expansion =
        |lambda: f64| -> f64 { coefficients.iter().enumerate().map(|(k, b)| b * lambda.powi(-(k as i32 + 1))).sum() };
    let rows: Vec<SweepRow> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let est = oracle.estimate(m, lambda, i)?;
            let log_i_expansion = expansion(lambda);
            let remainder = est.log_i - log_i_expansion;
            let usable = if oracle.is_deterministic() {
                remainder.abs() > DETERMINISTIC_FLOOR && est.converged != Some(false)
            } else {
                est.std_error < remainder.abs() / 5.0 && est.std_error < 1e-3
            };
            Ok(SweepRow {
                d: m.dim(),
                lambda,
                order,
                log_i_oracle: est.log_i,
                log_i_expansion,
                remainder,
                oracle_std_error: est.std_error,
                usable,
            })
        })
        .collect::<Result<_>>()?;
    let good: Vec<&SweepRow> = rows.iter().filter(|r| r.usable).collect();
    let fit = if good.len() >= 2 {
        let x: Vec<f64> = good.iter().map(|r| r.lambda.ln()).collect();
        let y: Vec<f64> = good.iter().map(|r| r.remainder.abs().ln()).collect();
        Some(fit_slope(&x, &y)?)
    } else {
        None
    };
    Ok(SweepReport { rows, coefficients, fit })
}
