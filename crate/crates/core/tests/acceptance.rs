//! Acceptance suite. Run with `--nocapture` to see one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use hdlaplace::cumulant::{b1_closed_form, b_coefficient, build_pk, expand, joint_cumulant};
use hdlaplace::gaussian::{expect_poly, hermite_poly, HermiteIndex};
use hdlaplace::models::{logreg_model, quartic_model, random_tensors, Link};
use hdlaplace::oracle::{fit_slope, oracle_ghq, oracle_mc, oracle_radial, remainder_sweep, OracleChoice};
use hdlaplace::quadratize::{eliminate_stage, fold_stage_inputs, initial_quadratize, prune_weight, run_pipeline};
use hdlaplace::{max_relative_discrepancy, relative_discrepancy, Model, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUARTIC_TOL: f64 = 1e-9;
const DUAL_PATH_TOL: f64 = 1e-7;
const CLOSED_FORM_TOL: f64 = 1e-9;
const HERMITE_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;
const STRUCTURE_TOL: f64 = 1e-12;
const RADIAL_GHQ_TOL: f64 = 1e-8;
const MC_SIGMAS: f64 = 4.0;
const RADIAL_REL_TOL: f64 = 1e-12;
const SWEEP_LAMBDAS: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];
const RANDOM_MODELS: usize = 50;
const RANDOM_SCALE: f64 = 0.1;
const RELATIVE_FLOOR: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_budget = elapsed <= budget;
    let pass = out.pass && in_budget;
    println!(
        "criterion {id} [{name}]: {} ({}; {:.2}s of {:.0}s budget{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if in_budget { "" } else { ", over budget" }
    );
    pass
}

fn quartic(d: usize, order: usize) -> Model<f64> {
    quartic_model(d, order).unwrap().model().clone()
}

/// The seeded random models shared by criteria 2, 4 and 9.
fn random_models() -> Vec<Model<f64>> {
    (0..RANDOM_MODELS)
        .map(|i| {
            let d = 1 + i % 3;
            let order = 2 + (i / 3) % 2;
            random_tensors(d, order, 1000 + i as u64, RANDOM_SCALE).unwrap()
        })
        .collect()
}

fn quartic_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for d in 1..=6 {
        let m = quartic(d, 2);
        let want = -((d * d) as f64) / 24.0 - d as f64 / 12.0;
        let c = expand(&m).unwrap().coefficients[0];
        let q = run_pipeline(&m).unwrap().coefficients[0];
        worst = worst.max(relative_discrepancy(c, want, 0.0)).max(relative_discrepancy(q, want, 0.0));
    }
    Outcome { pass: worst <= QUARTIC_TOL, detail: format!("max relative error {worst:.2e}, tolerance {QUARTIC_TOL:e}") }
}

fn dual_path(models: &[Model<f64>]) -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (i, m) in models.iter().enumerate() {
        match (expand(m), run_pipeline(m)) {
            (Ok(c), Ok(q)) => {
                let gap = max_relative_discrepancy(&c.coefficients, &q.coefficients, RELATIVE_FLOOR);
                worst = worst.max(gap);
            }
            (a, b) => failures.push(format!("model {i}: {:?} / {:?}", a.err(), b.err())),
        }
    }
    Outcome {
        pass: worst <= DUAL_PATH_TOL && failures.is_empty(),
        detail: format!(
            "{} models, max relative discrepancy {worst:.2e}, tolerance {DUAL_PATH_TOL:e}{}",
            models.len(),
            if failures.is_empty() { String::new() } else { format!(", errors: {failures:?}") }
        ),
    }
}

fn remainder_scaling() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (order, target, tol) in [(2usize, -2.0, 0.15), (3, -3.0, 0.25)] {
        for d in 1..=2 {
            let m = quartic_model(d, order).unwrap();
            match remainder_sweep(&m, &SWEEP_LAMBDAS, order, OracleChoice::Radial { rel_tol: RADIAL_REL_TOL }) {
                Ok(r) => {
                    let fit = r.fit.expect("quartic remainders are nonzero");
                    let ok = r.rows.iter().all(|row| row.usable) && (fit.slope - target).abs() <= tol;
                    pass &= ok;
                    parts.push(format!("d={d} L={order} slope {:.3} (target {target} ± {tol})", fit.slope));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("d={d} L={order} error: {e}"));
                }
            }
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn closed_form_chain(models: &[Model<f64>]) -> Outcome {
    let mut worst = 0.0f64;
    for m in models {
        let b = b_coefficient(m, 2).unwrap();
        worst = worst.max(relative_discrepancy(b, b1_closed_form(m), RELATIVE_FLOOR));
    }
    Outcome {
        pass: worst <= CLOSED_FORM_TOL,
        detail: format!("max relative discrepancy {worst:.2e}, tolerance {CLOSED_FORM_TOL:e}"),
    }
}

fn hermite_facts() -> Outcome {
    let d = 4;
    let second = |h: &HermiteIndex| {
        let p: Polynomial<f64> = hermite_poly(h);
        expect_poly(&p.multiply(&p, 6).unwrap()).unwrap()
    };
    let cases = [
        (HermiteIndex::single(d, 2).unwrap(), 1.0),
        (HermiteIndex::triple(d, 1, 1, 1).unwrap(), 6.0),
        (HermiteIndex::triple(d, 0, 0, 3).unwrap(), 2.0),
        (HermiteIndex::triple(d, 0, 2, 3).unwrap(), 1.0),
    ];
    let mut worst = 0.0f64;
    for (h, want) in &cases {
        worst = worst.max((second(h) - want).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.25) {
            HermiteIndex::single(d, rng.random_range(0..d)).unwrap()
        } else {
            let (i, j, k) = (rng.random_range(0..d), rng.random_range(0..d), rng.random_range(0..d));
            HermiteIndex::triple(d, i, j, k).unwrap()
        }
    };
    let mut pairs = 0;
    let mut worst_orth = 0.0f64;
    while pairs < 30 {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if a == b {
            continue;
        }
        let pa: Polynomial<f64> = hermite_poly(&a);
        let pb: Polynomial<f64> = hermite_poly(&b);
        worst_orth = worst_orth.max(expect_poly(&pa.multiply(&pb, 6).unwrap()).unwrap().abs());
        pairs += 1;
    }
    Outcome {
        pass: worst <= HERMITE_TOL && worst_orth <= HERMITE_TOL,
        detail: format!("second-moment error {worst:.1e}, max |E[H_a H_b]| over {pairs} pairs {worst_orth:.1e}"),
    }
}

fn var_mean_identities() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..30u64 {
        let d = 1 + (i as usize) % 4;
        let m = random_tensors(d, 2, 7000 + i, 0.5).unwrap();
        let p1 = build_pk(&m, 1).unwrap();
        let p2 = build_pk(&m, 2).unwrap();
        let direct_var = expect_poly(&p1.multiply(&p1, 6).unwrap()).unwrap() - expect_poly(&p1).unwrap().powi(2);
        let direct_mean = expect_poly(&p2).unwrap();

        let grad_g = m.log_g_tensor_or_zero(1).as_vector();
        let t3 = m.f_tensor_or_zero(3);
        let grad_lap_f = t3.trace_last_pair().unwrap().as_vector();
        let tr_hess = m.log_g_tensor_or_zero(2).trace_last_pair().unwrap().scalar_value();
        let bilap = m.f_tensor_or_zero(4).trace_last_pair().unwrap().trace_last_pair().unwrap().scalar_value();
        let gg: f64 = grad_g.iter().map(|v| v * v).sum();
        let lap_g = tr_hess + gg;
        let formula_var =
            (0..d).map(|k| (grad_g[k] - 0.5 * grad_lap_f[k]).powi(2)).sum::<f64>() + t3.frobenius_sq() / 6.0;
        let formula_mean = lap_g - gg - 0.25 * bilap;
        worst = worst.max(relative_discrepancy(direct_var, formula_var, RELATIVE_FLOOR)).max(relative_discrepancy(
            direct_mean,
            formula_mean,
            RELATIVE_FLOOR,
        ));
        let cum_var = joint_cumulant(&[p1.clone(), p1]).unwrap();
        worst = worst.max(relative_discrepancy(cum_var, formula_var, RELATIVE_FLOOR));
    }
    Outcome {
        pass: worst <= IDENTITY_TOL,
        detail: format!("max relative error {worst:.2e} over 30 models, tolerance {IDENTITY_TOL:e}"),
    }
}

fn logistic_bic() -> Outcome {
    let ns = [100usize, 200, 400];
    let mut errs = Vec::new();
    for &n in &ns {
        let p = match logreg_model(n, 2, 17, &[0.6, -0.4], Link::Logistic, 2) {
            Ok(p) => p,
            Err(e) => return Outcome { pass: false, detail: format!("n={n}: {e}") },
        };
        let b1 = expand(p.integrand.model()).unwrap().coefficients[0];
        let evidence = p.log_evidence_ghq(60).unwrap();
        errs.push((evidence - p.bic_prediction(b1)).abs());
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let fit = fit_slope(&x, &y).unwrap();
    Outcome {
        pass: (fit.slope + 2.0).abs() <= 0.3,
        detail: format!(
            "errors {:?}, slope {:.3} (target -2 ± 0.3)",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            fit.slope
        ),
    }
}

fn oracle_cross_validation() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_sigma = 0.0f64;
    let mut converged = true;
    for d in 1..=3 {
        let m = quartic_model(d, 2).unwrap();
        for lambda in [50.0, 200.0] {
            let r = oracle_radial(&m, lambda, RADIAL_REL_TOL).unwrap();
            let g = oracle_ghq(&m, lambda, 60).unwrap();
            converged &= g.converged == Some(true);
            worst = worst.max((r.log_i - g.log_i).abs());
            let mc = oracle_mc(&m, lambda, 1_000_000, 42 + d as u64).unwrap();
            worst_sigma = worst_sigma.max((mc.log_i - r.log_i).abs() / mc.std_error);
        }
    }
    Outcome {
        pass: worst <= RADIAL_GHQ_TOL && worst_sigma <= MC_SIGMAS && converged,
        detail: format!("max |radial − ghq| {worst:.2e}, max |mc − radial| {worst_sigma:.2} standard errors"),
    }
}

/// Re-derives the elimination postconditions from the returned maps.
fn structural_invariants(models: &[Model<f64>]) -> Outcome {
    let mut worst0 = 0.0f64;
    let mut worst_stage = 0.0f64;
    let mut errors = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let l = m.order();
        let cap = 2 * l + 1;
        let (x, residual) = match initial_quadratize(m) {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("model {i}: {e}"));
                continue;
            }
        };
        let f = m.taylor_f();
        let scale = f.max_magnitude().max(1.0);
        let composed = f.compose(&x, cap).unwrap();
        for (mono, c) in composed.terms() {
            if mono.degree() >= 3 {
                worst0 = worst0.max(c.abs() / scale);
            }
        }
        let mut e = fold_stage_inputs(m, &x, &residual).unwrap();
        for stage in 1..l {
            let (t, next) = match eliminate_stage(&e, stage) {
                Ok(v) => v,
                Err(err) => {
                    errors.push(format!("model {i} stage {stage}: {err}"));
                    break;
                }
            };
            let escale = e.poly().max_magnitude().max(1.0);
            let mut moved = e.poly().compose(&t, cap).unwrap();
            prune_weight(&mut moved, cap);
            for (mono, c) in moved.terms() {
                if mono.degree() >= 3 {
                    for k in 0..=stage {
                        worst_stage = worst_stage.max(c.coeff(k).abs() / escale);
                    }
                }
            }
            if let Err(err) = next.check_structure() {
                errors.push(format!("model {i} stage {stage}: {err}"));
            }
            e = next;
        }
    }
    Outcome {
        pass: worst0 <= STRUCTURE_TOL && worst_stage <= STRUCTURE_TOL && errors.is_empty(),
        detail: format!(
            "{} models, max residual {worst0:.1e} after initial elimination, max low-order residual {worst_stage:.1e} after stages{}",
            models.len(),
            if errors.is_empty() { String::new() } else { format!(", errors: {errors:?}") }
        ),
    }
}

#[test]
fn acceptance_suite() {
    let random = random_models();
    let mut quartics: Vec<Model<f64>> = (1..=6).map(|d| quartic(d, 2)).collect();
    quartics.extend(random.iter().cloned());
    let secs = Duration::from_secs;
    let results = [
        run(1, "quartic b1 exactness", secs(1), quartic_exactness),
        run(2, "dual-path equivalence", secs(60), || dual_path(&random)),
        run(3, "remainder scaling", secs(30), remainder_scaling),
        run(4, "closed-form b1 chain", secs(30), || closed_form_chain(&random)),
        run(5, "Hermite moments and orthogonality", secs(5), hermite_facts),
        run(6, "variance and mean identities", secs(10), var_mean_identities),
        run(7, "logistic BIC correction", secs(60), logistic_bic),
        run(8, "oracle cross-validation", secs(60), oracle_cross_validation),
        run(9, "structural invariants", secs(60), || structural_invariants(&quartics)),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
