//! Command-line surface for `hdlaplace`: model files, coefficient reports,
//! oracle checks and remainder sweeps.

pub mod model_file;
pub mod report;

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use hdlaplace::oracle::{remainder_sweep, OracleChoice};
use hdlaplace::{cumulant, max_relative_discrepancy, quadratize};

pub use model_file::{load, LoadedModel, ModelFile, Source};
pub use report::{ReportFile, SCHEMA_VERSION};

use report::{EvidenceReport, FitReport, ModelSummary, OracleRow, PathReport};

/// Largest relative gap tolerated between the two coefficient paths.
pub const DUAL_PATH_TOL: f64 = 1e-6;
/// Relative tolerance of the radial oracle.
pub const RADIAL_REL_TOL: f64 = 1e-12;
pub const CSV_HEADER: &str = "d,lambda,L,logI_oracle,logI_expansion,remainder,oracle_stderr";

const GHQ_POINT_BUDGET: f64 = 1e7;
const DEFAULT_GHQ_NODES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cumulant,
    Quadratize,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Radial,
    Ghq,
    Mc,
}

/// Oracle flags as given on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub kind: Option<OracleKind>,
    pub samples: usize,
    pub seed: u64,
    pub nodes: Option<usize>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { kind: None, samples: 1_000_000, seed: 0, nodes: None }
    }
}

impl OracleOptions {
    /// Radial for exactly radial integrands, Gauss–Hermite otherwise.
    pub fn choice(&self, m: &LoadedModel) -> OracleChoice {
        let d = m.model.dim();
        let kind = self.kind.unwrap_or(if m.integrand.exact_radial() { OracleKind::Radial } else { OracleKind::Ghq });
        match kind {
            OracleKind::Radial => OracleChoice::Radial { rel_tol: RADIAL_REL_TOL },
            OracleKind::Ghq => OracleChoice::Ghq { nodes_per_dim: self.nodes.unwrap_or_else(|| default_nodes(d)) },
            OracleKind::Mc => OracleChoice::Mc { samples: self.samples, seed: self.seed },
        }
    }
}

fn default_nodes(d: usize) -> usize {
    let fit = GHQ_POINT_BUDGET.powf(1.0 / d as f64).floor() as usize;
    fit.clamp(2, DEFAULT_GHQ_NODES)
}

fn summary(m: &LoadedModel) -> ModelSummary {
    ModelSummary { label: m.model.label().to_string(), d: m.model.dim(), order: m.model.order() }
}

pub fn cmd_coeffs(m: &LoadedModel, method: Method) -> Result<ReportFile> {
    let mut report = ReportFile::new("coeffs", summary(m));
    let cum = matches!(method, Method::Cumulant | Method::Both)
        .then(|| cumulant::expand(&m.model))
        .transpose()
        .context("cumulant path")?;
    let quad = matches!(method, Method::Quadratize | Method::Both)
        .then(|| quadratize::run_pipeline(&m.model))
        .transpose()
        .context("quadratizer path")?;
    report.paths.extend(cum.iter().chain(&quad).map(PathReport::from));
    if let (Some(a), Some(b)) = (&cum, &quad) {
        let gap = max_relative_discrepancy(&a.coefficients, &b.coefficients, 1e-300);
        report.discrepancy = Some(gap);
        report.check(
            "dual-path agreement",
            gap <= DUAL_PATH_TOL,
            format!("max relative discrepancy {gap:e} (tolerance {DUAL_PATH_TOL:e})"),
        );
    }
    Ok(report)
}

pub fn cmd_verify(m: &LoadedModel, lambda: Option<f64>, opts: &OracleOptions) -> Result<ReportFile> {
    let lambda = match (lambda, &m.logistic) {
        (Some(l), _) => l,
        (None, Some(p)) => p.n as f64,
        (None, None) => bail!("--lambda is required for models without a sample size"),
    };
    let mut report = ReportFile::new("verify", summary(m));
    let expansion = cumulant::expand(&m.model).context("cumulant path")?;
    let choice = opts.choice(m);
    let est = choice.estimate(&m.integrand, lambda, 0)?;
    let row = OracleRow::from_estimate(m.model.dim(), m.model.order(), &est, expansion.log_expansion(lambda));
    if let Some(false) = est.converged {
        report.check("oracle convergence", false, "Gauss–Hermite grid disagrees with its coarser companion");
    }
    if !choice.is_deterministic() {
        report.check(
            "oracle precision",
            row.usable,
            format!("std_error {:e} against remainder {:e}", row.std_error, row.remainder),
        );
    }
    if let Some(p) = &m.logistic {
        let nodes = opts.nodes.unwrap_or_else(|| default_nodes(p.dim()));
        let log_evidence = p.log_evidence_ghq(nodes)?;
        let b1 = expansion.coefficients.first().copied().unwrap_or(0.0);
        let bic_corrected = p.bic_prediction(b1);
        report.evidence =
            Some(EvidenceReport { n: p.n, log_evidence, bic_corrected, gap: log_evidence - bic_corrected });
    }
    report.paths.push(PathReport::from(&expansion));
    report.oracle_rows.push(row);
    Ok(report)
}

/// Sweep report plus the CSV body.
pub fn cmd_sweep(m: &LoadedModel, lambdas: &[f64], opts: &OracleOptions) -> Result<(ReportFile, String)> {
    let choice = opts.choice(m);
    let sweep = remainder_sweep(&m.integrand, lambdas, m.model.order(), choice)?;
    let mut report = ReportFile::new("sweep", summary(m));
    let oracle = choice.method().to_string();
    report.oracle_rows = sweep.rows.iter().map(|r| OracleRow::from_sweep(r, &oracle)).collect();
    report.fit = sweep.fit.as_ref().map(FitReport::from);
    let flagged = sweep.flagged_rows();
    if !choice.is_deterministic() {
        report.check(
            "oracle precision",
            flagged.is_empty(),
            if flagged.is_empty() {
                "every row has std_error < |remainder|/5".to_string()
            } else {
                format!("rows {flagged:?} have std_error ≥ |remainder|/5 or ≥ 1e-3")
            },
        );
    }
    Ok((report, sweep_csv(&sweep.rows)))
}

pub fn sweep_csv(rows: &[hdlaplace::SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{:e},{},{:e},{:e},{:e},{:e}",
            r.d, r.lambda, r.order, r.log_i_oracle, r.log_i_expansion, r.remainder, r.oracle_std_error
        )
        .expect("writing to a String");
    }
    out
}

/// Comma-separated values or a geometric range `a:b:factor`.
pub fn parse_lambdas(s: &str) -> Result<Vec<f64>> {
    let parse = |t: &str| -> Result<f64> {
        t.trim().parse::<f64>().with_context(|| format!("invalid lambda value '{}'", t.trim()))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, r] = parts.as_slice() else {
            bail!("lambda range must be a:b:factor, got '{s}'");
        };
        let (a, b, r) = (parse(a)?, parse(b)?, parse(r)?);
        if !(a > 0.0 && b >= a && r > 1.0 && b.is_finite()) {
            bail!("lambda range needs 0 < a ≤ b and factor > 1, got {a}:{b}:{r}");
        }
        let mut out = Vec::new();
        let mut v = a;
        while v <= b * (1.0 + 1e-12) {
            out.push(v);
            v *= r;
        }
        Ok(out)
    } else {
        s.split(',').map(parse).collect()
    }
}
