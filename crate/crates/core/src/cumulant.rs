//! Coefficients from joint cumulants of polynomials of a standard Gaussian.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::expansion::{relative_discrepancy, Diagnostics, ExpansionResult, Path};
use crate::gaussian::expect_poly;
use crate::model::Model;
use crate::poly::Polynomial;
use crate::scalar::Scalar;

/// Tolerance of the `b₁` closed-form cross-check performed by [`expand`].
pub const B1_CROSS_CHECK_TOL: f64 = 1e-10;

/// `p_k(x) = ∇^k log g(0)[x^{⊗k}] − ∇^{k+2} f(0)[x^{⊗(k+2)}] / ((k+1)(k+2))`.
pub fn build_pk<S: Scalar>(model: &Model<S>, k: usize) -> Result<Polynomial<S>> {
    let hi = model.max_log_g_order();
    if k == 0 || k > hi {
        return Err(Error::OutOfRange { what: "p_k index", value: k as i64, allowed: format!("1..={hi}") });
    }
    let mut p = Polynomial::zero(model.dim(), k + 2, ());
    if let Some(t) = model.log_g_tensor(k) {
        p = p.add(&t.to_poly())?;
    }
    if let Some(t) = model.f_tensor(k + 2) {
        let w = S::ratio(1, ((k + 1) * (k + 2)) as i64);
        p = p.sub(&t.to_poly().scale(&w))?;
    }
    Ok(p)
}

/// Multiplicities `α₁ … α_M` with `Σ i·α_i = M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlphaIndex {
    alpha: Vec<usize>,
}

impl AlphaIndex {
    pub fn new(alpha: Vec<usize>) -> Result<Self> {
        let m = alpha.len();
        let total: usize = alpha.iter().enumerate().map(|(i, a)| (i + 1) * a).sum();
        if total != m {
            return Err(Error::Structure(format!("alpha {alpha:?} has weight {total}, expected {m}")));
        }
        Ok(Self { alpha })
    }

    /// Every α of weight `m`, in ascending lexicographic order.
    pub fn enumerate(m: usize) -> Vec<Self> {
        fn rec(i: usize, remaining: usize, cur: &mut Vec<usize>, m: usize, out: &mut Vec<AlphaIndex>) {
            if i > m {
                if remaining == 0 {
                    out.push(AlphaIndex { alpha: cur.clone() });
                }
                return;
            }
            for a in 0..=remaining / i {
                cur.push(a);
                rec(i + 1, remaining - a * i, cur, m, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if m > 0 {
            rec(1, m, &mut Vec::with_capacity(m), m, &mut out);
        }
        out
    }

    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    /// `M = Σ i·α_i`.
    pub fn weight(&self) -> usize {
        self.alpha.len()
    }

    /// Number of cumulant arguments `|α| = Σ α_i`.
    pub fn arity(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// Argument list: `α₁` copies of 1, then `α₂` copies of 2, ...
    pub fn slots(&self) -> Vec<usize> {
        self.alpha.iter().enumerate().flat_map(|(i, &a)| std::iter::repeat_n(i + 1, a)).collect()
    }

    /// `Π α_i! (i!)^{α_i}`.
    pub fn denominator(&self) -> u128 {
        let fact = |n: usize| (1..=n as u128).product::<u128>();
        self.alpha.iter().enumerate().map(|(i, &a)| fact(a) * fact(i + 1).pow(a as u32)).product()
    }
}

/// Sums `(−1)^{|π|−1} (|π|−1)! Π_{B∈π} moment(B)` over set partitions of `{0..m}`; blocks are bitmasks.
fn cumulant_from_moments<S: Scalar>(m: usize, mut moment: impl FnMut(u32) -> Result<S>) -> Result<S> {
    if m == 0 {
        return Err(Error::EmptyCumulant);
    }
    if m > 31 {
        return Err(Error::OutOfRange { what: "cumulant arity", value: m as i64, allowed: "1..=31".into() });
    }
    let mut moments: HashMap<u32, S> = HashMap::new();
    let mut total = S::zero();
    let mut labels = vec![0usize; m];
    loop {
        let blocks = labels.iter().copied().max().unwrap_or(0) + 1;
        let mut masks = vec![0u32; blocks];
        for (j, &b) in labels.iter().enumerate() {
            masks[b] |= 1 << j;
        }
        let mut term = S::one();
        for mask in masks {
            let v = match moments.get(&mask) {
                Some(v) => v.clone(),
                None => {
                    let v = moment(mask)?;
                    moments.insert(mask, v.clone());
                    v
                }
            };
            term = term * v;
            if term.is_exact_zero() {
                break;
            }
        }
        if !term.is_exact_zero() {
            let fact: i64 = (1..blocks as i64).product();
            let signed = if blocks % 2 == 1 { fact } else { -fact };
            total = total + term * S::from_int(signed);
        }
        if !next_restricted_growth(&mut labels) {
            break;
        }
    }
    Ok(total)
}

/// Advances a restricted growth string; false once all partitions are visited.
fn next_restricted_growth(labels: &mut [usize]) -> bool {
    let n = labels.len();
    for i in (1..n).rev() {
        let bound = labels[..i].iter().copied().max().unwrap_or(0) + 1;
        if labels[i] < bound {
            labels[i] += 1;
            for l in labels.iter_mut().skip(i + 1) {
                *l = 0;
            }
            return true;
        }
    }
    false
}

/// `cum(p₁(Z), …, p_m(Z))` for `Z ~ N(0, I_d)`.
pub fn joint_cumulant<S: Scalar>(polys: &[Polynomial<S>]) -> Result<S> {
    let Some(first) = polys.first() else {
        return Err(Error::EmptyCumulant);
    };
    let dim = first.dim();
    if let Some(p) = polys.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
    }
    if polys.iter().any(Polynomial::is_zero) {
        return Ok(S::zero());
    }
    let mut products: HashMap<u32, Polynomial<S>> = HashMap::new();
    cumulant_from_moments(polys.len(), |mask| {
        let prod = subset_product(polys, mask, &mut products)?;
        expect_poly(&prod)
    })
}

fn subset_product<S: Scalar>(
    polys: &[Polynomial<S>],
    mask: u32,
    cache: &mut HashMap<u32, Polynomial<S>>,
) -> Result<Polynomial<S>> {
    if let Some(p) = cache.get(&mask) {
        return Ok(p.clone());
    }
    let low = mask.trailing_zeros() as usize;
    let rest = mask & (mask - 1);
    let p = if rest == 0 {
        polys[low].clone()
    } else {
        let r = subset_product(polys, rest, cache)?;
        let cap = r.max_degree() + polys[low].max_degree();
        r.with_max_degree(cap).multiply(&polys[low].with_max_degree(cap), cap)?
    };
    cache.insert(mask, p.clone());
    Ok(p)
}

/// Products and moments of `p_k` multisets, shared across α-terms.
struct PkCache<S: Scalar> {
    pk: Vec<Polynomial<S>>,
    products: HashMap<Vec<usize>, Polynomial<S>>,
    moments: HashMap<Vec<usize>, S>,
}

impl<S: Scalar> PkCache<S> {
    fn new(model: &Model<S>, up_to: usize) -> Result<Self> {
        let pk = (1..=up_to).map(|k| build_pk(model, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { pk, products: HashMap::new(), moments: HashMap::new() })
    }

    fn poly(&self, k: usize) -> &Polynomial<S> {
        &self.pk[k - 1]
    }

    fn product(&mut self, ks: &[usize]) -> Result<Polynomial<S>> {
        if ks.len() == 1 {
            return Ok(self.poly(ks[0]).clone());
        }
        if let Some(p) = self.products.get(ks) {
            return Ok(p.clone());
        }
        let (last, head) = ks.split_last().expect("non-empty multiset");
        let r = self.product(head)?;
        let q = self.poly(*last);
        let cap = r.max_degree() + q.max_degree();
        let p = r.with_max_degree(cap).multiply(&q.with_max_degree(cap), cap)?;
        self.products.insert(ks.to_vec(), p.clone());
        Ok(p)
    }

    fn moment(&mut self, ks: &[usize]) -> Result<S> {
        if let Some(v) = self.moments.get(ks) {
            return Ok(v.clone());
        }
        let v = expect_poly(&self.product(ks)?)?;
        self.moments.insert(ks.to_vec(), v.clone());
        Ok(v)
    }

    fn alpha_term(&mut self, alpha: &AlphaIndex) -> Result<S> {
        let slots = alpha.slots();
        if slots.iter().any(|&k| self.poly(k).is_zero()) {
            return Ok(S::zero());
        }
        let cum = cumulant_from_moments(slots.len(), |mask| {
            let ks: Vec<usize> = (0..slots.len()).filter(|j| mask & (1 << j) != 0).map(|j| slots[j]).collect();
            self.moment(&ks)
        })?;
        Ok(cum / S::from_u128(alpha.denominator()).expect("denominator fits the scalar type"))
    }
}

fn check_m<S: Scalar>(model: &Model<S>, m: usize) -> Result<()> {
    let hi = 2 * model.order() - 2;
    if m % 2 == 1 || m < 2 || m > hi {
        return Err(Error::OutOfRange {
            what: "cumulant weight M",
            value: m as i64,
            allowed: if hi >= 2 { format!("even values in 2..={hi}") } else { "none (L = 1)".into() },
        });
    }
    Ok(())
}

/// `b_{M/2} = Σ_{α: Σ iα_i = M} cum(p_α(Z)) / Π α_i!(i!)^{α_i}`.
pub fn b_coefficient<S: Scalar>(model: &Model<S>, m: usize) -> Result<S> {
    check_m(model, m)?;
    let mut cache = PkCache::new(model, m)?;
    let mut total = S::zero();
    for alpha in AlphaIndex::enumerate(m) {
        total = total + cache.alpha_term(&alpha)?;
    }
    Ok(total)
}

/// `−½∇Δf·∇g + ⅛‖∇Δf‖² + (1/12)‖∇³f‖_F² + ½Δg − ⅛Δ²f`, all at the origin.
pub fn b1_closed_form<S: Scalar>(model: &Model<S>) -> S {
    let d = model.dim();
    let grad_lap_f = model.f_tensor_or_zero(3).trace_last_pair().expect("order 3").as_vector();
    let grad_g = model.log_g_tensor_or_zero(1).as_vector();
    let frob3 = model.f_tensor_or_zero(3).frobenius_sq();
    let tr_hess_log_g = model.log_g_tensor_or_zero(2).trace_last_pair().expect("order 2").scalar_value();
    let bilap_f =
        model.f_tensor_or_zero(4).trace_last_pair().and_then(|t| t.trace_last_pair()).expect("order 4").scalar_value();
    let dot = |a: &[S], b: &[S]| (0..d).fold(S::zero(), |acc, i| acc + a[i].clone() * b[i].clone());
    let lap_g = tr_hess_log_g + dot(&grad_g, &grad_g);
    -S::ratio(1, 2) * dot(&grad_lap_f, &grad_g)
        + S::ratio(1, 8) * dot(&grad_lap_f, &grad_lap_f)
        + S::ratio(1, 12) * frob3
        + S::ratio(1, 2) * lap_g
        - S::ratio(1, 8) * bilap_f
}

/// `b₁ … b_{L−1}` by cumulant enumeration.
pub fn expand<S: Scalar>(model: &Model<S>) -> Result<ExpansionResult<S>> {
    let n = model.order() - 1;
    let mut diagnostics = Diagnostics::default();
    let mut coefficients = Vec::with_capacity(n);
    if n > 0 {
        let mut cache = PkCache::new(model, 2 * n)?;
        for k in 1..=n {
            let start = Instant::now();
            let alphas = AlphaIndex::enumerate(2 * k);
            let mut total = S::zero();
            for alpha in &alphas {
                total = total + cache.alpha_term(alpha)?;
            }
            diagnostics.term_counts.push(alphas.len());
            diagnostics.alpha_order.push(alphas.iter().map(|a| a.alpha().to_vec()).collect());
            diagnostics.timings.push(start.elapsed());
            coefficients.push(total);
        }
        let closed = b1_closed_form(model).magnitude_signed();
        let enumerated = coefficients[0].magnitude_signed();
        let gap = relative_discrepancy(enumerated, closed, 1e-12);
        diagnostics.b1_closed_form_discrepancy = Some(gap);
        if gap > B1_CROSS_CHECK_TOL {
            diagnostics.notes.push(format!("b1 closed form differs by {gap:e} (relative)"));
        }
    }
    Ok(ExpansionResult { coefficients, path: Path::Cumulant, diagnostics })
}

trait SignedF64 {
    fn magnitude_signed(&self) -> f64;
}

impl<S: Scalar> SignedF64 for S {
    fn magnitude_signed(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{symmetrize, MultiIndex, SymTensor};
    use num_rational::BigRational;

    pub(crate) fn quartic<S: Scalar>(d: usize, order: usize) -> Model<S> {
        // ∇⁴f(0)[x^4] = ‖x‖⁴: entry (i,i,i,i) = 1, (i,i,j,j) = 1/3
        let mut t = SymTensor::zeros(4, d);
        for i in 0..d {
            for j in i..d {
                t.set(&[i, i, j, j], if i == j { S::one() } else { S::ratio(1, 3) });
            }
        }
        Model::new(d, order, "quartic").unwrap().with_f_tensor(4, t).unwrap()
    }

    fn cubic(c: f64) -> Model<f64> {
        Model::new(1, 2, "cubic")
            .unwrap()
            .with_f_tensor(3, symmetrize(vec![(vec![0, 0, 0], c)], 3, 1).unwrap())
            .unwrap()
    }

    #[test]
    fn alpha_enumeration() {
        let a: Vec<Vec<usize>> = AlphaIndex::enumerate(2).iter().map(|a| a.alpha().to_vec()).collect();
        assert_eq!(a, vec![vec![0, 1], vec![2, 0]]);
        assert_eq!(AlphaIndex::enumerate(4).len(), 5);
        assert_eq!(AlphaIndex::enumerate(6).len(), 11);
        let all = AlphaIndex::enumerate(6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(AlphaIndex::new(vec![2, 0]).unwrap().denominator(), 2);
        assert_eq!(AlphaIndex::new(vec![0, 1]).unwrap().denominator(), 2);
        assert!(AlphaIndex::new(vec![1, 1]).is_err());
    }

    #[test]
    fn partitions_counted() {
        for (m, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)] {
            let mut labels = vec![0; m];
            let mut n = 1;
            while next_restricted_growth(&mut labels) {
                n += 1;
            }
            assert_eq!(n, bell);
        }
    }

    #[test]
    fn pk_examples() {
        let p = build_pk(&quartic::<f64>(2, 2), 2).unwrap();
        let x = [0.3, -1.1];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((p.eval(&x).unwrap() + r2 * r2 / 12.0).abs() < 1e-15);
        assert!(build_pk(&quartic::<f64>(2, 2), 1).unwrap().is_zero());
        let p1 = build_pk(&cubic(0.6), 1).unwrap();
        assert!((p1.eval(&[2.0]).unwrap() + 0.1 * 8.0).abs() < 1e-15);
        let v = symmetrize(vec![(vec![0], 0.5f64), (vec![1], -2.0)], 1, 2).unwrap();
        let m = Model::new(2, 1, "").unwrap().with_log_g_tensor(1, v).unwrap();
        assert!((build_pk(&m, 1).unwrap().eval(&[1.0, 1.0]).unwrap() + 1.5).abs() < 1e-15);
        assert!(build_pk(&m, 2).is_err());
        assert!(build_pk(&m, 0).is_err());
    }

    #[test]
    fn cumulant_examples() {
        let x1 = Polynomial::<f64>::variable(2, 4, 0, ());
        let x2 = Polynomial::<f64>::variable(2, 4, 1, ());
        assert_eq!(joint_cumulant(&[x1.clone(), x1.clone()]).unwrap(), 1.0);
        let x1sq = x1.multiply(&x1, 4).unwrap();
        let x2sq = x2.multiply(&x2, 4).unwrap();
        assert_eq!(joint_cumulant(&[x1sq.clone(), x2sq]).unwrap(), 0.0);
        assert_eq!(joint_cumulant(std::slice::from_ref(&x1sq)).unwrap(), 1.0);
        // fourth cumulant of a standard normal is zero, of x² the second is 2
        assert!(joint_cumulant(&vec![x1.clone(); 4]).unwrap().abs() < 1e-14);
        assert_eq!(joint_cumulant(&[x1sq.clone(), x1sq]).unwrap(), 2.0);
        assert_eq!(joint_cumulant::<f64>(&[]), Err(Error::EmptyCumulant));
        let y = Polynomial::<f64>::variable(3, 1, 0, ());
        assert!(matches!(joint_cumulant(&[x1, y]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn quartic_b1() {
        for d in 1..=6 {
            let m = quartic::<f64>(d, 2);
            let want = -((d * d) as f64) / 24.0 - d as f64 / 12.0;
            assert!((b_coefficient(&m, 2).unwrap() - want).abs() < 1e-13);
            assert!((b1_closed_form(&m) - want).abs() < 1e-13);
        }
        assert!((b_coefficient(&quartic::<f64>(3, 2), 2).unwrap() + 0.625).abs() < 1e-14);
    }

    #[test]
    fn quartic_b1_exact() {
        let m = quartic::<BigRational>(3, 3);
        let b1 = b_coefficient(&m, 2).unwrap();
        assert_eq!(b1, BigRational::new((-5).into(), 8.into()));
        assert_eq!(b1_closed_form(&m), b1);
    }

    #[test]
    fn cubic_b1() {
        let c = 0.7;
        let want = 5.0 * c * c / 24.0;
        assert!((b_coefficient(&cubic(c), 2).unwrap() - want).abs() < 1e-14);
        assert!((b1_closed_form(&cubic(c)) - want).abs() < 1e-14);
    }

    #[test]
    fn log_g_only_b1() {
        let v = symmetrize(vec![(vec![0], 0.5), (vec![1], -0.25)], 1, 2).unwrap();
        let h = symmetrize(vec![(vec![0, 0], 0.3), (vec![0, 1], 0.1), (vec![1, 1], -0.7)], 2, 2).unwrap();
        let m = Model::new(2, 2, "").unwrap().with_log_g_tensor(1, v).unwrap().with_log_g_tensor(2, h).unwrap();
        let want: f64 = 0.5 * (0.25 + 0.0625) + 0.5 * (0.3 - 0.7);
        assert!((b_coefficient(&m, 2).unwrap() - want).abs() < 1e-15);
        assert!((b1_closed_form(&m) - want).abs() < 1e-15);
    }

    #[test]
    fn expand_shapes() {
        let r = expand(&Model::<f64>::new(2, 1, "").unwrap()).unwrap();
        assert!(r.coefficients.is_empty());
        let r = expand(&quartic::<f64>(2, 2)).unwrap();
        assert_eq!(r.coefficients.len(), 1);
        assert!((r.coefficients[0] + 1.0 / 3.0).abs() < 1e-14);
        assert!(r.diagnostics.b1_closed_form_discrepancy.unwrap() < 1e-12);
        let r = expand(&quartic::<f64>(2, 3)).unwrap();
        assert_eq!(r.coefficients.len(), 2);
        assert_eq!(r.diagnostics.term_counts, vec![2, 5]);
        let zero = expand(&Model::<f64>::new(3, 3, "").unwrap()).unwrap();
        assert_eq!(zero.coefficients, vec![0.0, 0.0]);
        assert!(b_coefficient(&quartic::<f64>(2, 3), 3).is_err());
        assert!(b_coefficient(&quartic::<f64>(2, 3), 6).is_err());
        let _ = MultiIndex::zero(1);
    }
}
