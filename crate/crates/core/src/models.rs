//! Concrete integrands: the quartic family, logistic-type regression, random polynomials.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::poly::{sorted_tuples, SymTensor};

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Tolerance of the standardization check performed by [`LaplaceIntegrand::new`].
pub const STANDARDIZATION_TOL: f64 = 1e-8;

/// `g` and `f` as point functions, with their derivative data at the origin.
///
/// `f` is stored through its excess `f(x) − ½‖x‖²`, which keeps Gaussian
/// importance weights free of cancellation.
#[derive(Clone)]
pub struct LaplaceIntegrand {
    model: Model<f64>,
    excess: PointFn,
    log_g: PointFn,
    exact_radial: bool,
}

impl fmt::Debug for LaplaceIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaplaceIntegrand")
            .field("model", &self.model)
            .field("exact_radial", &self.exact_radial)
            .finish_non_exhaustive()
    }
}

impl LaplaceIntegrand {
    /// Builds an integrand after checking `f(0) = 0`, `∇f(0) = 0`, `∇²f(0) = I` and `log g(0) = 0`.
    pub fn new(
        model: Model<f64>,
        excess: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        log_g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        exact_radial: bool,
    ) -> Result<Self> {
        let out = Self { model, excess: Arc::new(excess), log_g: Arc::new(log_g), exact_radial };
        out.check_standardized()?;
        Ok(out)
    }

    /// Polynomial integrand read off the model tensors, plus `confinement·‖x‖^{2L+2}`.
    pub fn from_model(model: Model<f64>, confinement: f64) -> Result<Self> {
        if !(confinement >= 0.0 && confinement.is_finite()) {
            return Err(Error::InvalidModel(format!("confinement {confinement} must be finite and non-negative")));
        }
        let top = model.f_tensors().filter(|(_, t)| !t.is_zero()).map(|(k, _)| k).max().unwrap_or(2);
        if top % 2 == 1 && confinement == 0.0 {
            return Err(Error::InvalidModel(format!(
                "f has a nonzero odd top-order tensor (order {top}); a positive confinement is required"
            )));
        }
        let f = model.taylor_f();
        let lg = model.taylor_log_g();
        let power = model.order() + 1;
        let excess = move |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            f.eval(x).expect("dimension checked") - 0.5 * r2 + confinement * r2.powi(power as i32)
        };
        let log_g = move |x: &[f64]| lg.eval(x).expect("dimension checked");
        Self::new(model, excess, log_g, false)
    }

    pub fn model(&self) -> &Model<f64> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn exact_radial(&self) -> bool {
        self.exact_radial
    }

    /// `f(x) − ½‖x‖²`.
    pub fn excess(&self, x: &[f64]) -> f64 {
        (self.excess)(x)
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>() + self.excess(x)
    }

    pub fn log_g(&self, x: &[f64]) -> f64 {
        (self.log_g)(x)
    }

    /// Same integrand with the model truncated to order `order`.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        Ok(Self { model: self.model.truncated(order)?, ..self.clone() })
    }

    /// Richardson-extrapolated central differences of `f` at the origin.
    pub fn derivatives_at_origin(&self) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.dim();
        let h0 = 0.02;
        let eval = |dirs: &[(usize, f64)]| {
            let mut x = vec![0.0; d];
            for &(i, s) in dirs {
                x[i] += s;
            }
            self.f(&x)
        };
        let richardson = |g: &dyn Fn(f64) -> f64| {
            let a = g(h0);
            let b = g(h0 / 2.0);
            let c = g(h0 / 4.0);
            let ab = (4.0 * b - a) / 3.0;
            let bc = (4.0 * c - b) / 3.0;
            (16.0 * bc - ab) / 15.0
        };
        let grad = (0..d).map(|i| richardson(&|h| (eval(&[(i, h)]) - eval(&[(i, -h)])) / (2.0 * h))).collect();
        let mut hess = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = if i == j {
                    richardson(&|h| (eval(&[(i, h)]) - 2.0 * eval(&[]) + eval(&[(i, -h)])) / (h * h))
                } else {
                    richardson(&|h| {
                        (eval(&[(i, h), (j, h)]) - eval(&[(i, h), (j, -h)]) - eval(&[(i, -h), (j, h)])
                            + eval(&[(i, -h), (j, -h)]))
                            / (4.0 * h * h)
                    })
                };
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        (grad, hess)
    }

    fn check_standardized(&self) -> Result<()> {
        let d = self.dim();
        let origin = vec![0.0; d];
        let f0 = self.f(&origin);
        if f0.abs() > STANDARDIZATION_TOL {
            return Err(Error::InvalidModel(format!("f(0) = {f0:e}, expected 0")));
        }
        let lg0 = self.log_g(&origin);
        if lg0.abs() > STANDARDIZATION_TOL {
            return Err(Error::InvalidModel(format!("log g(0) = {lg0:e}, expected 0")));
        }
        let (grad, hess) = self.derivatives_at_origin();
        if let Some((i, g)) = grad.iter().enumerate().find(|(_, g)| g.abs() > STANDARDIZATION_TOL) {
            return Err(Error::InvalidModel(format!("gradient of f at 0 has component {} = {g:e}", i + 1)));
        }
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                if (hess[(i, j)] - want).abs() > STANDARDIZATION_TOL {
                    return Err(Error::InvalidModel(format!(
                        "Hessian of f at 0 has entry ({}, {}) = {}, expected {want}",
                        i + 1,
                        j + 1,
                        hess[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Order-4 tensor with `T[x^{⊗4}] = ‖x‖⁴`.
pub fn norm4_tensor(d: usize) -> SymTensor<f64> {
    let mut t = SymTensor::zeros(4, d);
    for i in 0..d {
        for j in i..d {
            t.set(&[i, i, j, j], if i == j { 1.0 } else { 1.0 / 3.0 });
        }
    }
    t
}

/// `f(x) = ‖x‖²/2 + ‖x‖⁴/24`, `g ≡ 1`.
pub fn quartic_model(d: usize, order: usize) -> Result<LaplaceIntegrand> {
    let mut model = Model::new(d, order, format!("quartic d={d}"))?;
    if 2 * order + 1 >= 4 {
        model.set_f_tensor(4, norm4_tensor(d))?;
    }
    LaplaceIntegrand::new(
        model,
        |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            r2 * r2 / 24.0
        },
        |_| 0.0,
        true,
    )
}

/// Random tensors with entries uniform in `[−scale, scale]` and a confinement `scale·‖x‖^{2L+2}`.
pub fn random_poly_model(d: usize, order: usize, seed: u64, scale: f64) -> Result<LaplaceIntegrand> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidModel(format!("scale {scale} must be finite and non-negative")));
    }
    let model = random_tensors(d, order, seed, scale)?;
    LaplaceIntegrand::from_model(model, scale)
}

/// The tensors of [`random_poly_model`] alone.
pub fn random_tensors(d: usize, order: usize, seed: u64, scale: f64) -> Result<Model<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Model::new(d, order, format!("random d={d} L={order} seed={seed} scale={scale}"))?;
    let mut draw = |k: usize| {
        let mut t = SymTensor::zeros(k, d);
        for idx in sorted_tuples(k, d) {
            let u: f64 = rng.random_range(-1.0..=1.0);
            t.set(&idx, scale * u);
        }
        t
    };
    for k in 3..=2 * order + 1 {
        let t = draw(k);
        model.set_f_tensor(k, t)?;
    }
    for k in 1..=2 * order - 1 {
        let t = draw(k);
        model.set_log_g_tensor(k, t)?;
    }
    Ok(model)
}

/// Convex link `ψ` of a generalized linear loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    /// `ψ(t) = log(1 + eᵗ)`.
    Logistic,
    /// `ψ(t) = t²/2`.
    Gaussian,
}

impl Link {
    pub fn psi(self, t: f64) -> f64 {
        match self {
            Link::Logistic => t.max(0.0) + (-t.abs()).exp().ln_1p(),
            Link::Gaussian => 0.5 * t * t,
        }
    }

    /// `ψ^{(k)}(t)`, `k ≥ 1`.
    pub fn derivative(self, k: usize, t: f64) -> f64 {
        match self {
            Link::Logistic => {
                let s = 1.0 / (1.0 + (-t).exp());
                let p = sigmoid_poly(k);
                p.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
            Link::Gaussian => match k {
                1 => t,
                2 => 1.0,
                _ => 0.0,
            },
        }
    }
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Link::Logistic),
            "gaussian" => Ok(Link::Gaussian),
            other => Err(Error::InvalidModel(format!("unknown link '{other}' (expected logistic or gaussian)"))),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Logistic => "logistic",
            Link::Gaussian => "gaussian",
        })
    }
}

/// Coefficients (ascending powers of σ) of `P_k` with `ψ^{(k)} = P_k(σ)`:
/// `P₁ = σ`, `P_{k+1} = P_k′(σ)·(σ − σ²)`.
pub fn sigmoid_poly(k: usize) -> Vec<f64> {
    let mut p = vec![0.0, 1.0];
    for _ in 1..k {
        let mut next = vec![0.0; p.len() + 1];
        for (j, c) in p.iter().enumerate().skip(1) {
            let dc = j as f64 * c;
            next[j] += dc;
            next[j + 1] -= dc;
        }
        p = next;
    }
    p
}

/// A seeded regression instance with loss
/// `ℓ(x) = (1/n) Σ [ψ(X_iᵀx) − ψ′(X_iᵀx*) X_iᵀx]`, minimized at `x*`.
#[derive(Clone, Debug)]
pub struct LogisticProblem {
    pub n: usize,
    pub link: Link,
    pub features: Vec<Vec<f64>>,
    pub x_star: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub hessian_inv_sqrt: DMatrix<f64>,
    pub ell_star: f64,
    pub integrand: LaplaceIntegrand,
}

/// Radius of the sphere the features are drawn from.
pub const FEATURE_RADIUS: f64 = 1.5;
const SPAN_ATTEMPTS: usize = 10;
const MIN_GRAM_EIGENVALUE: f64 = 1e-8;

fn loss(link: Link, features: &[Vec<f64>], slopes: &[f64], x: &[f64]) -> f64 {
    let n = features.len() as f64;
    features
        .iter()
        .zip(slopes)
        .map(|(xi, s)| {
            let a: f64 = xi.iter().zip(x).map(|(u, v)| u * v).sum();
            link.psi(a) - s * a
        })
        .sum::<f64>()
        / n
}

fn draw_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|u| u * u).sum::<f64>().sqrt();
            v.iter().map(|u| FEATURE_RADIUS * u / norm).collect()
        })
        .collect()
}

fn min_gram_eigenvalue(features: &[Vec<f64>], d: usize) -> f64 {
    let mut gram = DMatrix::zeros(d, d);
    for x in features {
        let v = DVector::from_column_slice(x);
        gram += &v * v.transpose();
    }
    gram /= features.len() as f64;
    gram.symmetric_eigenvalues().min()
}

/// Standardized regression integrand `f(x) = ℓ(H^{−1/2}x + x*) − ℓ(x*)`, `g ≡ 1`,
/// with `H = ∇²ℓ(x*)` and features uniform on the sphere of radius 1.5.
pub fn logreg_model(
    n: usize,
    d: usize,
    seed: u64,
    x_star: &[f64],
    link: Link,
    order: usize,
) -> Result<LogisticProblem> {
    if d == 0 || n < d {
        return Err(Error::InvalidModel(format!("need n ≥ d ≥ 1, got n = {n}, d = {d}")));
    }
    if x_star.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x_star.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = None;
    let mut last = 0.0;
    for _ in 0..SPAN_ATTEMPTS {
        let cand = draw_features(&mut rng, n, d);
        last = min_gram_eigenvalue(&cand, d);
        if last >= MIN_GRAM_EIGENVALUE {
            features = Some(cand);
            break;
        }
    }
    let Some(features) = features else {
        return Err(Error::InvalidModel(format!(
            "features do not span R^{d}: smallest Gram eigenvalue {last:e} after {SPAN_ATTEMPTS} draws"
        )));
    };
    let a_star: Vec<f64> = features.iter().map(|xi| xi.iter().zip(x_star).map(|(u, v)| u * v).sum()).collect();
    let slopes: Vec<f64> = a_star.iter().map(|&a| link.derivative(1, a)).collect();
    let nf = n as f64;
    let mut hessian = DMatrix::zeros(d, d);
    for (xi, &a) in features.iter().zip(&a_star) {
        let v = DVector::from_column_slice(xi);
        hessian += (&v * v.transpose()) * (link.derivative(2, a) / nf);
    }
    let eig = SymmetricEigen::new(hessian.clone());
    if eig.eigenvalues.min() <= MIN_GRAM_EIGENVALUE {
        return Err(Error::InvalidModel(format!("loss Hessian is singular (eigenvalue {:e})", eig.eigenvalues.min())));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let hessian_inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let whitened: Vec<Vec<f64>> = features
        .iter()
        .map(|xi| (&hessian_inv_sqrt * DVector::from_column_slice(xi)).iter().copied().collect())
        .collect();

    let mut model = Model::new(d, order, format!("logreg n={n} d={d} seed={seed} link={link}"))?;
    for k in 3..=2 * order + 1 {
        let mut t = SymTensor::zeros(k, d);
        for idx in sorted_tuples(k, d) {
            let v: f64 = whitened
                .iter()
                .zip(&a_star)
                .map(|(w, &a)| link.derivative(k, a) * idx.iter().map(|&i| w[i]).product::<f64>())
                .sum::<f64>()
                / nf;
            t.set(&idx, v);
        }
        model.set_f_tensor(k, t)?;
    }

    let ell_star = loss(link, &features, &slopes, x_star);
    let (feat, sl, xs, his) = (features.clone(), slopes.clone(), x_star.to_vec(), hessian_inv_sqrt.clone());
    let excess = move |x: &[f64]| {
        let y = &his * DVector::from_column_slice(x);
        let point: Vec<f64> = y.iter().zip(&xs).map(|(u, v)| u + v).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        loss(link, &feat, &sl, &point) - ell_star - 0.5 * r2
    };
    let integrand = LaplaceIntegrand::new(model, excess, |_| 0.0, false)?;
    Ok(LogisticProblem { n, link, features, x_star: x_star.to_vec(), hessian, hessian_inv_sqrt, ell_star, integrand })
}

impl LogisticProblem {
    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    /// `ℓ(x)` in original coordinates.
    pub fn loss(&self, x: &[f64]) -> f64 {
        let slopes: Vec<f64> = self
            .features
            .iter()
            .map(|xi| self.link.derivative(1, xi.iter().zip(&self.x_star).map(|(u, v)| u * v).sum()))
            .collect();
        loss(self.link, &self.features, &slopes, x)
    }

    /// `log ∫ e^{−nℓ(x)} dx` by Gauss–Hermite in the coordinates `x = x* + H^{−1/2}z/√n`.
    pub fn log_evidence_ghq(&self, nodes_per_dim: usize) -> Result<f64> {
        let d = self.dim();
        let nf = self.n as f64;
        let slopes: Vec<f64> = self
            .features
            .iter()
            .map(|xi| self.link.derivative(1, xi.iter().zip(&self.x_star).map(|(u, v)| u * v).sum()))
            .collect();
        let log_mean = crate::oracle::ghq_log_expectation(d, nodes_per_dim, |z| {
            let step = &self.hessian_inv_sqrt * DVector::from_column_slice(z) / nf.sqrt();
            let x: Vec<f64> = step.iter().zip(&self.x_star).map(|(u, v)| u + v).collect();
            let r2: f64 = z.iter().map(|v| v * v).sum();
            -nf * (loss(self.link, &self.features, &slopes, &x) - self.ell_star) + 0.5 * r2
        })?;
        let logdet = self.hessian.clone().symmetric_eigenvalues().iter().map(|l| l.ln()).sum::<f64>();
        Ok(-nf * self.ell_star - 0.5 * logdet + 0.5 * d as f64 * (2.0 * std::f64::consts::PI / nf).ln() + log_mean)
    }

    /// `−nℓ(x*) − ½ log det H − (d/2) log(n/2π) + b₁/n` for the given `b₁`.
    pub fn bic_prediction(&self, b1: f64) -> f64 {
        let nf = self.n as f64;
        let d = self.dim() as f64;
        let logdet = self.hessian.clone().symmetric_eigenvalues().iter().map(|l| l.ln()).sum::<f64>();
        -nf * self.ell_star - 0.5 * logdet - 0.5 * d * (nf / (2.0 * std::f64::consts::PI)).ln() + b1 / nf
    }
}
