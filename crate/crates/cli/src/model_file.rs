use std::collections::{BTreeMap, HashSet};
use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use hdlaplace::models::{logreg_model, quartic_model, random_poly_model, random_tensors, Link};
use hdlaplace::{LaplaceIntegrand, LogisticProblem, Model, SymTensor};
use serde::{Deserialize, Serialize};

/// One stored tensor entry: 1-based sorted indices and the derivative value.
pub type Entry = (Vec<usize>, f64);

/// How a model file was generated, so integrands with exact point
/// evaluations can be rebuilt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Quartic,
    Logreg { n: usize, seed: u64, x_star: Vec<f64>, link: String },
    Random { seed: u64, scale: f64 },
}

/// Derivative data of `f` and `log g` at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub d: usize,
    #[serde(rename = "L")]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub f_derivatives: BTreeMap<usize, Vec<Entry>>,
    #[serde(default)]
    pub log_g_derivatives: BTreeMap<usize, Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    /// Coefficient of the `‖x‖^{2L+2}` term added to polynomial integrands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confinement: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    F,
    LogG,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::F => "f_derivatives",
            Family::LogG => "log_g_derivatives",
        })
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| anyhow!("model file parse error at line {}, column {}: {e}", e.line(), e.column()))?;
        file.to_model()?;
        Ok(file)
    }

    /// Pretty JSON with one tensor entry per line.
    pub fn to_json(&self) -> Result<String> {
        let mut fields = vec![format!("  \"d\": {}", self.d), format!("  \"L\": {}", self.order)];
        if let Some(label) = &self.label {
            fields.push(format!("  \"label\": {}", serde_json::to_string(label)?));
        }
        for (name, map) in [("f_derivatives", &self.f_derivatives), ("log_g_derivatives", &self.log_g_derivatives)] {
            let mut orders = Vec::new();
            for (k, entries) in map {
                let rows = entries
                    .iter()
                    .map(|e| Ok(format!("      {}", serde_json::to_string(e)?)))
                    .collect::<Result<Vec<_>>>()?;
                orders.push(format!("    \"{k}\": [\n{}\n    ]", rows.join(",\n")));
            }
            if orders.is_empty() {
                fields.push(format!("  \"{name}\": {{}}"));
            } else {
                fields.push(format!("  \"{name}\": {{\n{}\n  }}", orders.join(",\n")));
            }
        }
        if let Some(source) = &self.source {
            fields.push(format!("  \"source\": {}", serde_json::to_string(source)?));
        }
        if let Some(c) = self.confinement {
            fields.push(format!("  \"confinement\": {}", serde_json::to_string(&c)?));
        }
        Ok(format!("{{\n{}\n}}\n", fields.join(",\n")))
    }

    pub fn from_model(model: &Model<f64>) -> Self {
        let collect = |tensors: Vec<(usize, &SymTensor<f64>)>| {
            tensors
                .into_iter()
                .filter(|(_, t)| !t.is_zero())
                .map(|(k, t)| {
                    let entries = t
                        .nonzero_classes()
                        .into_iter()
                        .map(|(idx, v)| (idx.into_iter().map(|i| i + 1).collect(), v))
                        .collect();
                    (k, entries)
                })
                .collect()
        };
        ModelFile {
            d: model.dim(),
            order: model.order(),
            label: (!model.label().is_empty()).then(|| model.label().to_string()),
            f_derivatives: collect(model.f_tensors().collect()),
            log_g_derivatives: collect(model.log_g_tensors().collect()),
            source: None,
            confinement: None,
        }
    }

    pub fn to_model(&self) -> Result<Model<f64>> {
        if self.d == 0 {
            bail!("field d: dimension must be at least 1");
        }
        if self.order == 0 {
            bail!("field L: order must be at least 1");
        }
        let mut model = Model::new(self.d, self.order, self.label.clone().unwrap_or_default())?;
        for (family, map) in [(Family::F, &self.f_derivatives), (Family::LogG, &self.log_g_derivatives)] {
            for (&k, entries) in map {
                let field = format!("{family}.{k}");
                let t = self.tensor(&field, k, entries)?;
                match family {
                    Family::F => model.set_f_tensor(k, t),
                    Family::LogG => model.set_log_g_tensor(k, t),
                }
                .with_context(|| format!("field {field}"))?;
            }
        }
        if let Some(c) = self.confinement {
            if !(c.is_finite() && c >= 0.0) {
                bail!("field confinement: must be finite and non-negative, got {c}");
            }
        }
        Ok(model)
    }

    fn tensor(&self, field: &str, k: usize, entries: &[Entry]) -> Result<SymTensor<f64>> {
        let mut t = SymTensor::zeros(k, self.d);
        let mut seen = HashSet::new();
        for (pos, (idx, value)) in entries.iter().enumerate() {
            let path = format!("{field}[{pos}]");
            if idx.len() != k {
                bail!("field {path}: index list {idx:?} has length {}, expected {k}", idx.len());
            }
            if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i > self.d) {
                bail!("field {path}: index {bad} outside 1..={}", self.d);
            }
            if idx.windows(2).any(|w| w[0] > w[1]) {
                bail!("field {path}: index list {idx:?} is not sorted");
            }
            if !value.is_finite() {
                bail!("field {path}: value {value} is not finite");
            }
            if !seen.insert(idx.clone()) {
                bail!("field {path}: index list {idx:?} repeats a permutation class");
            }
            let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
            t.set(&zero_based, *value);
        }
        Ok(t)
    }
}

/// Model file together with the integrand used by oracles.
pub struct LoadedModel {
    pub file: ModelFile,
    pub model: Model<f64>,
    pub integrand: LaplaceIntegrand,
    pub logistic: Option<LogisticProblem>,
}

/// Builds the model at order `order` (the file's own `L` when `None`).
pub fn load(file: ModelFile, order: Option<usize>) -> Result<LoadedModel> {
    let stored = file.to_model()?;
    let order = order.unwrap_or(file.order);
    if order == 0 {
        bail!("--L must be at least 1");
    }
    let d = file.d;
    let (integrand, logistic) = match &file.source {
        Some(Source::Quartic) => (quartic_model(d, order)?, None),
        Some(Source::Random { seed, scale }) => {
            let generated = random_tensors(d, file.order, *seed, *scale)?;
            let gap = tensor_gap(&generated, &stored);
            if gap > 1e-12 {
                bail!("model tensors differ from their recorded source by {gap:e}");
            }
            if order > file.order {
                bail!("--L {order} exceeds the model file order {}; regenerate the random model instead", file.order);
            }
            (LaplaceIntegrand::from_model(stored.truncated(order)?, *scale)?, None)
        }
        Some(Source::Logreg { n, seed, x_star, link }) => {
            let link: Link = link.parse()?;
            let p = logreg_model(*n, d, *seed, x_star, link, order)?;
            (p.integrand.clone(), Some(p))
        }
        None => {
            if order > file.order {
                bail!("--L {order} exceeds the model file order {} and no generator is recorded", file.order);
            }
            let m = stored.truncated(order)?;
            (LaplaceIntegrand::from_model(m, file.confinement.unwrap_or(0.0))?, None)
        }
    };
    if matches!(file.source, Some(Source::Quartic | Source::Logreg { .. })) {
        let common = order.min(file.order);
        let rebuilt = integrand.model().truncated(common)?;
        let given = stored.truncated(common)?;
        let gap = tensor_gap(&rebuilt, &given);
        if gap > 1e-12 {
            bail!("model tensors differ from their recorded source by {gap:e}");
        }
    }
    let model = integrand.model().clone();
    Ok(LoadedModel { file, model, integrand, logistic })
}

fn tensor_gap(a: &Model<f64>, b: &Model<f64>) -> f64 {
    let mut gap: f64 = 0.0;
    for k in 3..=2 * a.order() + 1 {
        let (x, y) = (a.f_tensor_or_zero(k), b.f_tensor_or_zero(k));
        for (idx, v) in x.classes() {
            gap = gap.max((v - y.get(&idx)).abs() / v.abs().max(1.0));
        }
    }
    for k in 1..=2 * a.order() - 1 {
        let (x, y) = (a.log_g_tensor_or_zero(k), b.log_g_tensor_or_zero(k));
        for (idx, v) in x.classes() {
            gap = gap.max((v - y.get(&idx)).abs() / v.abs().max(1.0));
        }
    }
    gap
}

/// Builtin generators, serialized with their source recorded.
pub fn builtin_quartic(d: usize, order: usize) -> Result<ModelFile> {
    let m = quartic_model(d, order)?;
    let mut f = ModelFile::from_model(m.model());
    f.source = Some(Source::Quartic);
    Ok(f)
}

pub fn builtin_random(d: usize, order: usize, seed: u64, scale: f64) -> Result<ModelFile> {
    let m = random_poly_model(d, order, seed, scale)?;
    let mut f = ModelFile::from_model(m.model());
    f.source = Some(Source::Random { seed, scale });
    f.confinement = Some(scale);
    Ok(f)
}

pub fn builtin_logreg(d: usize, order: usize, n: usize, seed: u64, x_star: Vec<f64>, link: Link) -> Result<ModelFile> {
    let p = logreg_model(n, d, seed, &x_star, link, order)?;
    let mut f = ModelFile::from_model(p.integrand.model());
    f.source = Some(Source::Logreg { n, seed, x_star, link: link.to_string() });
    Ok(f)
}
