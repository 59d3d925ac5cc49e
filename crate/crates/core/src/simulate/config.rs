use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::OutcomeFamily;

fn default_gamma() -> f64 {
    0.5
}
fn default_outcome_intercept() -> f64 {
    0.5
}
fn default_rho() -> f64 {
    0.25
}
fn default_censor_target() -> f64 {
    0.3
}
fn default_reps() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.05
}

/// One simulation scenario.
///
/// Data are generated as
///
/// ```text
/// X ~ N(0, 1),  e ~ N(0, Σ),  Σ_ij = ρ^|i−j|
/// M_k = c_M + α_k X + e_k
/// linear:   Y = c + γX + βᵀM + ε
/// logistic: P(Y = 1) = expit(γX + βᵀM)
/// cox:      T ~ Exp(exp(γX + βᵀM)),  C ~ U(0, c₀),  Y = min(T, C)
/// ```
///
/// The mediator intercept `c_M` defaults to 0 for a single mediator and
/// 0.5 for several, following the two sets of study designs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: OutcomeFamily,
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// `c` in the linear outcome model; ignored by the other families.
    #[serde(default = "default_outcome_intercept")]
    pub outcome_intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mediator_intercept: Option<f64>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_censor_target")]
    pub censor_target: f64,
    /// Upper end of the censoring distribution; filled in by calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl ScenarioConfig {
    /// A single-mediator scenario with default nuisance parameters.
    pub fn single(family: OutcomeFamily, n: usize, alpha: f64, beta: f64) -> Self {
        Self::multiple(family, n, vec![alpha], vec![beta])
    }

    pub fn multiple(family: OutcomeFamily, n: usize, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self {
            name: None,
            family,
            n,
            alpha,
            beta,
            gamma: default_gamma(),
            outcome_intercept: default_outcome_intercept(),
            mediator_intercept: None,
            rho: default_rho(),
            censor_target: default_censor_target(),
            c0: None,
            reps: default_reps(),
            base_seed: 0,
            delta: default_delta(),
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    pub fn mediator_intercept(&self) -> f64 {
        self.mediator_intercept
            .unwrap_or(if self.d() == 1 { 0.0 } else { 0.5 })
    }

    /// Indices `k` (0-based) with `α_k β_k ≠ 0`.
    pub fn truth(&self) -> BTreeSet<usize> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .enumerate()
            .filter(|(_, (a, b))| **a * **b != 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if d == 0 {
            return Err(Error::config("alpha", "at least one mediator is required"));
        }
        if self.beta.len() != d {
            return Err(Error::config(
                "beta",
                format!("length {} does not match alpha length {d}", self.beta.len()),
            ));
        }
        for (field, values) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(field, "entries must be finite"));
            }
        }
        for (field, v) in [
            ("gamma", self.gamma),
            ("outcome_intercept", self.outcome_intercept),
            ("mediator_intercept", self.mediator_intercept()),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        let params = d + 3;
        if self.n < params + 2 {
            return Err(Error::config(
                "n",
                format!("{} is too small for {d} mediators", self.n),
            ));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::config(
                "rho",
                format!("must lie in (-1, 1), got {}", self.rho),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        if self.family == OutcomeFamily::Cox {
            if !(self.censor_target > 0.0 && self.censor_target < 1.0) {
                return Err(Error::config(
                    "censor_target",
                    format!("must lie in (0, 1), got {}", self.censor_target),
                ));
            }
            if let Some(c0) = self.c0 {
                if !(c0 > 0.0 && c0.is_finite()) {
                    return Err(Error::config("c0", format!("must be positive, got {c0}")));
                }
            }
        }
        Ok(())
    }
}

/// Which Monte Carlo summary a scenario feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    SizePower,
    Fwer,
    Coverage,
}

impl std::fmt::Display for StudyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StudyKind::SizePower => "size_power",
            StudyKind::Fwer => "fwer",
            StudyKind::Coverage => "coverage",
        })
    }
}

/// A table's worth of scenarios: shared `base` fields overlaid by each row.
///
/// ```json
/// { "name": "linear-size", "kind": "size_power",
///   "base": { "family": "linear", "reps": 10000, "base_seed": 1 },
///   "rows": [ { "n": 500, "alpha": [0.0], "beta": [0.0] } ] }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBundle {
    pub name: String,
    pub kind: StudyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub base: serde_json::Map<String, serde_json::Value>,
    pub rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

impl ScenarioBundle {
    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: Self = serde_json::from_str(text)?;
        if bundle.rows.is_empty() {
            return Err(Error::config("rows", "bundle has no rows"));
        }
        Ok(bundle)
    }

    /// Merged, validated scenarios in row order.
    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut merged = self.base.clone();
                for (k, v) in row {
                    merged.insert(k.clone(), v.clone());
                }
                let mut config: ScenarioConfig =
                    serde_json::from_value(serde_json::Value::Object(merged))
                        .map_err(|e| Error::config(format!("rows[{i}]"), e.to_string()))?;
                if config.name.is_none() {
                    config.name = Some(format!("{}[{i}]", self.name));
                }
                config
                    .validate()
                    .map_err(|e| Error::config(format!("rows[{i}]"), e.to_string()))?;
                Ok(config)
            })
            .collect()
    }
}
