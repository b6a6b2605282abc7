//! Coefficients by iterated quadratizing changes of variables.
//!
//! The exponent is carried as a polynomial in `t` whose coefficients are
//! truncated series in `ε = d/λ`. A monomial `ε^ℓ t^n` is kept only while
//! `2ℓ + n ≤ 2L + 1`; every product and substitution used below is monotone in
//! that weight, so the retained part is computed exactly.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::expansion::{Diagnostics, ExpansionResult, Path};
use crate::model::Model;
use crate::poly::{compose_maps, Coeff, EpsSeries, MultiIndex, PolyMap, Polynomial};
use crate::scalar::Scalar;

/// The exponent `E_m(t)` at stage `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedExponent<S: Scalar> {
    poly: Polynomial<EpsSeries<S>>,
    stage: usize,
    order: usize,
}

impl<S: Scalar> GradedExponent<S> {
    /// Wraps a polynomial, pruning it to the weight budget of order `order` (= L).
    pub fn new(mut poly: Polynomial<EpsSeries<S>>, stage: usize, order: usize) -> Self {
        prune_weight(&mut poly, 2 * order + 1);
        Self { poly, stage, order }
    }

    pub fn poly(&self) -> &Polynomial<EpsSeries<S>> {
        &self.poly
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    /// Largest `t`-degree retained.
    pub fn degree_cap(&self) -> usize {
        2 * self.order + 1
    }

    /// Largest `ε`-order retained.
    pub fn eps_cap(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.poly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poly.is_zero()
    }

    /// Checks that the `ε⁰` part is `½‖t‖²` and that every monomial of degree
    /// at least 3 vanishes below `ε^stage`.
    pub fn check_structure(&self) -> Result<()> {
        let tol = S::ZERO_TOL * self.poly.max_magnitude().max(1.0);
        let half = S::ratio(1, 2);
        for (m, c) in self.poly.terms() {
            let deg = m.degree();
            let expected0 = if deg == 2 && m.exponents().contains(&2) { half.clone() } else { S::zero() };
            if (c.coeff(0) - expected0.clone()).magnitude() > tol {
                return Err(Error::Structure(format!(
                    "monomial {m:?} has eps^0 coefficient {}, expected {expected0}",
                    c.coeff(0)
                )));
            }
            if deg >= 3 {
                for l in 1..self.stage.min(c.order() + 1) {
                    if !c.coeff(l).is_exact_zero() {
                        return Err(Error::Structure(format!(
                            "monomial {m:?} of degree {deg} has eps^{l} coefficient {} at stage {}",
                            c.coeff(l),
                            self.stage
                        )));
                    }
                }
            }
        }
        for i in 0..self.dim() {
            let mut e = vec![0u16; self.dim()];
            e[i] = 2;
            if self.poly.coeff(&MultiIndex::from_exponents(&e)).is_none() {
                return Err(Error::Structure(format!("quadratic monomial {e:?} is missing")));
            }
        }
        Ok(())
    }
}

/// `J₁` and `J₂` of `E_L(t) = ε J₁ᵀt + ½ tᵀ(I + 2εJ₂)t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareForm<S: Scalar> {
    pub a_series: Vec<EpsSeries<S>>,
    pub b_series: Vec<Vec<EpsSeries<S>>>,
    pub d: usize,
}

/// Drops every `ε^ℓ t^n` with `2ℓ + n > budget`.
pub fn prune_weight<S: Scalar>(p: &mut Polynomial<EpsSeries<S>>, budget: usize) {
    p.update_coeffs(|m, c| {
        let n = m.degree();
        for l in 0..=c.order() {
            if 2 * l + n > budget {
                c.set_coeff(l, S::zero());
            }
        }
    });
}

fn prune_map<S: Scalar>(map: &PolyMap<EpsSeries<S>>, budget: usize) -> Result<PolyMap<EpsSeries<S>>> {
    let comps = map
        .components()
        .iter()
        .map(|c| {
            let mut c = c.clone();
            prune_weight(&mut c, budget);
            c
        })
        .collect();
    PolyMap::new(comps)
}

/// Removes the degree-`degree` part at `ε^eps` after checking it is rounding noise.
fn clear_residual<C: Coeff>(
    p: &mut Polynomial<C>,
    degree: usize,
    tol: f64,
    pick: impl Fn(&C) -> <C as Coeff>::Scalar,
    zero: impl Fn(&mut C),
) -> Result<()> {
    let mut bad = None;
    for (m, c) in p.terms() {
        if m.degree() == degree && pick(c).magnitude() > tol {
            bad = Some(format!("{m:?} keeps coefficient {} after elimination (tolerance {tol:e})", pick(c)));
            break;
        }
    }
    if let Some(msg) = bad {
        return Err(Error::Structure(msg));
    }
    p.update_coeffs(|m, c| {
        if m.degree() == degree {
            zero(c);
        }
    });
    Ok(())
}

/// Step map `x ↦ x − ∇h(x)/M` for a degree-`M` homogeneous `h`.
fn gradient_step<S: Scalar>(h: &Polynomial<S>, degree: usize) -> Vec<Polynomial<S>> {
    let w = -S::ratio(1, degree as i64);
    h.gradient().iter().map(|g| g.scale(&w)).collect()
}

/// Eliminates every `ε⁰` monomial of degree `3 … 2L+1` from `f_{2L+1}`.
///
/// Returns the accumulated map `X = id + φ` and the residual `f_{2L+1} ∘ X`,
/// which equals `½‖t‖²` up to the degree cap.
pub fn initial_quadratize<S: Scalar>(model: &Model<S>) -> Result<(PolyMap<S>, GradedExponent<S>)> {
    let l = model.order();
    let cap = 2 * l + 1;
    let d = model.dim();
    let mut f = model.taylor_f();
    let tol = S::ZERO_TOL * f.max_magnitude().max(1.0);
    let mut x = PolyMap::identity(d, cap, ());
    for m in 3..=cap {
        let h = f.homogeneous_part(m);
        if h.is_zero() {
            continue;
        }
        let step = PolyMap::identity_plus(gradient_step(&h, m))?;
        f = f.compose(&step, cap)?;
        x = compose_maps(&x, &step, cap)?;
        clear_residual(&mut f, m, tol, |c| c.clone(), |c| *c = S::zero())?;
    }
    Ok((x, GradedExponent::new(f.lift(l), 0, l)))
}

/// `tr Σ_k (−1)^{k+1}/k (J − I)^k`, with `prune` applied to every product.
fn logdet_with<C: Coeff>(
    map: &PolyMap<C>,
    degree_cap: usize,
    mut prune: impl FnMut(&mut Polynomial<C>),
) -> Result<Polynomial<C>> {
    let d = map.dim();
    if !map.identity_part() {
        return Err(Error::Structure("log-determinant needs a map of the form id + perturbation".into()));
    }
    let pert = map.perturbation()?;
    let ctx = pert[0].ctx().clone();
    let a: Vec<Vec<Polynomial<C>>> = pert
        .iter()
        .map(|p| {
            p.gradient()
                .into_iter()
                .map(|g| {
                    let mut g = g.with_max_degree(degree_cap);
                    prune(&mut g);
                    g
                })
                .collect()
        })
        .collect();
    let mut out = Polynomial::zero(d, degree_cap, ctx.clone());
    let mut power = a.clone();
    for k in 1.. {
        if power.iter().all(|row| row.iter().all(Polynomial::is_zero)) {
            break;
        }
        if k > 4 * degree_cap + 64 {
            return Err(Error::Structure("log-determinant series does not terminate".into()));
        }
        let w = <C::Scalar as Scalar>::ratio(if k % 2 == 1 { 1 } else { -1 }, k as i64);
        for (i, row) in power.iter().enumerate() {
            out = out.add(&row[i].scale(&w))?;
        }
        let mut next = vec![vec![Polynomial::zero(d, degree_cap, ctx.clone()); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Polynomial::zero(d, degree_cap, ctx.clone());
                for (k2, p) in power[i].iter().enumerate() {
                    if p.is_zero() || a[k2][j].is_zero() {
                        continue;
                    }
                    acc = acc.add(&p.multiply(&a[k2][j], degree_cap)?)?;
                }
                prune(&mut acc);
                next[i][j] = acc;
            }
        }
        power = next;
    }
    prune(&mut out);
    Ok(out)
}

/// `log det X′(t)` of a scalar-coefficient map, truncated at `degree_cap`.
pub fn logdet_poly<S: Scalar>(map: &PolyMap<S>, degree_cap: usize) -> Result<Polynomial<S>> {
    logdet_with(map, degree_cap, |_| {})
}

/// `log det T′(t)` of a map `T = id + ε^{eps_order}·(…)`, truncated at
/// `degree_cap` in `t` and at the series order in `ε`.
pub fn logdet_series<S: Scalar>(
    map: &PolyMap<EpsSeries<S>>,
    eps_order: usize,
    degree_cap: usize,
) -> Result<Polynomial<EpsSeries<S>>> {
    for p in map.perturbation()? {
        for (m, c) in p.terms() {
            if let Some(v) = c.valuation() {
                if v < eps_order {
                    return Err(Error::Structure(format!(
                        "perturbation monomial {m:?} has eps^{v} content below the declared eps^{eps_order}"
                    )));
                }
            }
        }
    }
    logdet_with(map, degree_cap, |_| {})
}

/// `ε/d · p`, lifted to series of order `order`.
fn eps_over_d<S: Scalar>(p: &Polynomial<S>, d: usize, order: usize) -> Polynomial<EpsSeries<S>> {
    let w = S::ratio(1, d as i64);
    p.map_coeffs(order, |c| EpsSeries::monomial(c.clone() * w.clone(), 1, order))
}

/// `E₁ = f_{2L+1}∘X − (ε/d)·[log g(X(t)) + log det X′(t)]`.
pub fn fold_stage_inputs<S: Scalar>(
    model: &Model<S>,
    x: &PolyMap<S>,
    residual: &GradedExponent<S>,
) -> Result<GradedExponent<S>> {
    let l = model.order();
    let d = model.dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    let inner_cap = 2 * l - 1;
    let log_g = model.taylor_log_g().compose(x, inner_cap)?;
    let log_det = logdet_poly(x, inner_cap)?;
    let corr = eps_over_d(&log_g.add(&log_det)?, d, l);
    let e1 = residual.poly.sub(&corr)?.with_max_degree(2 * l + 1);
    Ok(GradedExponent::new(e1, 1, l))
}

/// One stage: removes the `ε^m` part of every monomial of degree `3 … 2L−2m+1`
/// and folds in the Jacobian of the accumulated substitution.
pub fn eliminate_stage<S: Scalar>(
    e: &GradedExponent<S>,
    m: usize,
) -> Result<(PolyMap<EpsSeries<S>>, GradedExponent<S>)> {
    let l = e.order;
    if m == 0 || m + 1 > l {
        return Err(Error::OutOfRange {
            what: "stage",
            value: m as i64,
            allowed: format!("1..={}", l.saturating_sub(1)),
        });
    }
    if e.stage != m {
        return Err(Error::Structure(format!("exponent is at stage {}, asked to run stage {m}", e.stage)));
    }
    e.check_structure()?;
    let d = e.dim();
    let budget = 2 * l + 1;
    let cap = budget;
    let mut poly = e.poly.clone();
    let tol = S::ZERO_TOL * poly.max_magnitude().max(1.0);
    let mut t = PolyMap::identity(d, cap, l);
    for deg in 3..=(budget - 2 * m) {
        let h = poly.homogeneous_part(deg).eps_component(m);
        if h.is_zero() {
            continue;
        }
        let pert =
            gradient_step(&h, deg).iter().map(|g| g.map_coeffs(l, |c| EpsSeries::monomial(c.clone(), m, l))).collect();
        let step = PolyMap::identity_plus(pert)?;
        poly = poly.compose(&step, cap)?;
        prune_weight(&mut poly, budget);
        t = prune_map(&compose_maps(&t, &step, cap)?, budget)?;
        clear_residual(&mut poly, deg, tol, |c| c.coeff(m), |c| c.set_coeff(m, S::zero()))?;
    }
    let inner = budget - 2;
    let log_det = logdet_with(&t, inner, |p| prune_weight(p, inner))?;
    let w = S::ratio(1, d as i64);
    let corr = log_det.map_coeffs(l, |c| c.shift_up(1).scale(&w));
    poly = poly.sub(&corr)?;
    let next = GradedExponent::new(poly, m + 1, l);
    next.check_structure()?;
    Ok((t, next))
}

/// Reads `J₁`, `J₂` off an exponent of degree at most 2.
pub fn complete_square<S: Scalar>(e: &GradedExponent<S>) -> Result<SquareForm<S>> {
    let d = e.dim();
    let l = e.order;
    let top = l.saturating_sub(1);
    let tol = S::ZERO_TOL * e.poly.max_magnitude().max(1.0);
    let mut a_series = vec![EpsSeries::zero(top); d];
    let mut b_series = vec![vec![EpsSeries::zero(top); d]; d];
    let half = S::ratio(1, 2);
    for (m, c) in e.poly.terms() {
        let deg = m.degree();
        if deg > 2 {
            return Err(Error::Structure(format!("monomial {m:?} of degree {deg} survives to the last stage")));
        }
        let strip = |expected: S| -> Result<EpsSeries<S>> {
            let gap = c.coeff(0) - expected.clone();
            if gap.magnitude() > tol {
                return Err(Error::Structure(format!(
                    "monomial {m:?} has eps^0 coefficient {}, expected {expected}",
                    c.coeff(0)
                )));
            }
            let mut s = c.clone();
            s.set_coeff(0, S::zero());
            Ok(s.shift_down(1)?.truncate(top))
        };
        match deg {
            0 => {
                strip(S::zero())?;
            }
            1 => {
                let i = m.exponents().iter().position(|&x| x == 1).expect("degree one");
                a_series[i] = strip(S::zero())?;
            }
            _ => {
                let idx = m.to_index_tuple();
                let (i, j) = (idx[0], idx[1]);
                if i == j {
                    b_series[i][i] = strip(half.clone())?;
                } else {
                    let s = strip(S::zero())?.scale(&half);
                    b_series[i][j] = s.clone();
                    b_series[j][i] = s;
                }
            }
        }
    }
    Ok(SquareForm { a_series, b_series, d })
}

type Matrix<S> = Vec<Vec<EpsSeries<S>>>;

fn mat_mul<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, order: usize) -> Matrix<S> {
    let d = a.len();
    let mut out = vec![vec![EpsSeries::zero(order); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = EpsSeries::zero(order);
            for k in 0..d {
                acc = &acc + &(&a[i][k] * &b[k][j]);
            }
            out[i][j] = acc;
        }
    }
    out
}

/// `b_k = d^k [ε^k] Q(ε)` with
/// `Q = ½dε J₁ᵀ(I + 2εJ₂)^{−1}J₁ − ½ tr log(I + 2εJ₂)`.
pub fn extract_coefficients<S: Scalar>(sq: &SquareForm<S>, d: usize, l: usize) -> Result<ExpansionResult<S>> {
    if sq.d != d || sq.a_series.len() != d || sq.b_series.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: sq.a_series.len() });
    }
    let n = l.saturating_sub(1);
    let mut coefficients = Vec::with_capacity(n);
    if n > 0 {
        let two = S::from_int(2);
        let a: Matrix<S> =
            sq.b_series.iter().map(|row| row.iter().map(|s| s.truncate(n).shift_up(1).scale(&two)).collect()).collect();
        let j1: Vec<EpsSeries<S>> = sq.a_series.iter().map(|s| s.truncate(n)).collect();
        // (I + A)^{-1} = Σ (−A)^k and tr log(I + A) = Σ (−1)^{k+1} tr(A^k)/k; A = O(ε).
        let mut inv: Matrix<S> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { EpsSeries::one(n) } else { EpsSeries::zero(n) }).collect())
            .collect();
        let mut trlog = EpsSeries::zero(n);
        let mut power = a.clone();
        for k in 1..=n {
            let sign = if k % 2 == 1 { S::one() } else { -S::one() };
            for (i, row) in power.iter().enumerate() {
                inv[i][i] = &inv[i][i] + &row[i].scale(&-sign.clone());
                for (j, s) in row.iter().enumerate() {
                    if i != j {
                        inv[i][j] = &inv[i][j] + &s.scale(&-sign.clone());
                    }
                }
                trlog = &trlog + &row[i].scale(&(sign.clone() / S::from_int(k as i64)));
            }
            power = mat_mul(&power, &a, n);
        }
        let mut quad = EpsSeries::zero(n);
        for i in 0..d {
            for j in 0..d {
                quad = &quad + &(&(&j1[i] * &inv[i][j]) * &j1[j]);
            }
        }
        let half = S::ratio(1, 2);
        let q = &quad.shift_up(1).scale(&(half.clone() * S::from_int(d as i64))) - &trlog.scale(&half);
        let mut dk = S::one();
        for k in 1..=n {
            dk = dk * S::from_int(d as i64);
            coefficients.push(q.coeff(k) * dk.clone());
        }
    }
    Ok(ExpansionResult { coefficients, path: Path::Quadratize, diagnostics: Diagnostics::default() })
}

/// Initial quadratization, fold, stages `1 … L−1`, square completion and extraction.
pub fn run_pipeline<S: Scalar>(model: &Model<S>) -> Result<ExpansionResult<S>> {
    let l = model.order();
    let mut timings = Vec::with_capacity(l + 1);
    let mut monomials = Vec::with_capacity(l + 1);
    let start = Instant::now();
    let (x, residual) = initial_quadratize(model)?;
    let mut e = fold_stage_inputs(model, &x, &residual)?;
    timings.push(start.elapsed());
    monomials.push(e.len());
    for m in 1..l {
        let start = Instant::now();
        e = eliminate_stage(&e, m)?.1;
        timings.push(start.elapsed());
        monomials.push(e.len());
    }
    let sq = complete_square(&e)?;
    let mut out = extract_coefficients(&sq, model.dim(), l)?;
    out.diagnostics.timings = timings;
    out.diagnostics.stage_monomials = monomials;
    Ok(out)
}
