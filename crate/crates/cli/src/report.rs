use anyhow::{bail, Result};
use hdlaplace::oracle::{OracleEstimate, SlopeFit, SweepRow};
use hdlaplace::ExpansionResult;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelSummary,
    pub paths: Vec<PathReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle_rows: Vec<OracleRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceReport>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSummary {
    pub label: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub order: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub path: String,
    pub coefficients: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub term_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stage_monomials: Vec<usize>,
    pub timings_ms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1_closed_form_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl From<&ExpansionResult<f64>> for PathReport {
    fn from(r: &ExpansionResult<f64>) -> Self {
        let d = &r.diagnostics;
        PathReport {
            path: r.path.to_string(),
            coefficients: r.coefficients.clone(),
            term_counts: d.term_counts.clone(),
            stage_monomials: d.stage_monomials.clone(),
            timings_ms: d.timings.iter().map(|t| t.as_secs_f64() * 1e3).collect(),
            b1_closed_form_discrepancy: d.b1_closed_form_discrepancy,
            notes: d.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub d: usize,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub order: usize,
    pub oracle: String,
    pub log_i_oracle: f64,
    pub log_i_expansion: f64,
    pub remainder: f64,
    pub std_error: f64,
    pub usable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_or_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl OracleRow {
    pub fn from_estimate(d: usize, order: usize, est: &OracleEstimate, log_i_expansion: f64) -> Self {
        let remainder = est.log_i - log_i_expansion;
        OracleRow {
            d,
            lambda: est.lambda,
            order,
            oracle: est.method.to_string(),
            log_i_oracle: est.log_i,
            log_i_expansion,
            remainder,
            std_error: est.std_error,
            usable: est.std_error == 0.0 || est.std_error < remainder.abs() / 5.0,
            samples_or_nodes: (est.samples_or_nodes > 0).then_some(est.samples_or_nodes),
            seed: est.seed,
            converged: est.converged,
        }
    }

    pub fn from_sweep(row: &SweepRow, oracle: &str) -> Self {
        OracleRow {
            d: row.d,
            lambda: row.lambda,
            order: row.order,
            oracle: oracle.to_string(),
            log_i_oracle: row.log_i_oracle,
            log_i_expansion: row.log_i_expansion,
            remainder: row.remainder,
            std_error: row.oracle_std_error,
            usable: row.usable,
            samples_or_nodes: None,
            seed: None,
            converged: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub slope: f64,
    pub std_error: f64,
    pub intercept: f64,
    pub points: usize,
}

impl From<&SlopeFit> for FitReport {
    fn from(f: &SlopeFit) -> Self {
        FitReport { slope: f.slope, std_error: f.std_error, intercept: f.intercept, points: f.points }
    }
}

/// Regression evidence in original coordinates against its BIC-corrected value.
#[derive(Clone, Debug, Serialize)]
pub struct EvidenceReport {
    pub n: usize,
    pub log_evidence: f64,
    pub bic_corrected: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl ReportFile {
    pub fn new(command: &str, model: ModelSummary) -> Self {
        ReportFile {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            model,
            paths: Vec::new(),
            discrepancy: None,
            oracle_rows: Vec::new(),
            fit: None,
            evidence: None,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Every numeric field must be finite.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut want = |name: String, v: f64| {
            if !v.is_finite() {
                bad.push(name);
            }
        };
        for p in &self.paths {
            for (i, b) in p.coefficients.iter().enumerate() {
                want(format!("{}.b{}", p.path, i + 1), *b);
            }
            if let Some(v) = p.b1_closed_form_discrepancy {
                want(format!("{}.b1_closed_form_discrepancy", p.path), v);
            }
        }
        if let Some(v) = self.discrepancy {
            want("discrepancy".into(), v);
        }
        for (i, r) in self.oracle_rows.iter().enumerate() {
            for (name, v) in [
                ("lambda", r.lambda),
                ("log_i_oracle", r.log_i_oracle),
                ("log_i_expansion", r.log_i_expansion),
                ("remainder", r.remainder),
                ("std_error", r.std_error),
            ] {
                want(format!("oracle_rows[{i}].{name}"), v);
            }
        }
        if let Some(f) = &self.fit {
            want("fit.slope".into(), f.slope);
            want("fit.std_error".into(), f.std_error);
            want("fit.intercept".into(), f.intercept);
        }
        if let Some(e) = &self.evidence {
            want("evidence.log_evidence".into(), e.log_evidence);
            want("evidence.bic_corrected".into(), e.bic_corrected);
        }
        if !bad.is_empty() {
            bail!("report invariant violated: non-finite values in {}", bad.join(", "));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
