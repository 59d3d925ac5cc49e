//! Mediator and outcome regressions.
//!
//! The mediator model is always linear: `M_k ~ 1 + X + Z`. The outcome model
//! is a single joint regression of `Y` on `X`, all mediators and `Z`, fitted
//! as linear or logistic (both with intercept) or Cox (no intercept).

mod cox;
mod logistic;
mod newton;
mod ols;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use cox::fit_cox;
pub use logistic::fit_logistic;
pub use ols::fit_ols;

use crate::error::{Error, Result};
use ols::LeastSquares;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeFamily {
    Linear,
    Logistic,
    Cox,
}

impl std::fmt::Display for OutcomeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutcomeFamily::Linear => "linear",
            OutcomeFamily::Logistic => "logistic",
            OutcomeFamily::Cox => "cox",
        })
    }
}

impl std::str::FromStr for OutcomeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(OutcomeFamily::Linear),
            "logistic" => Ok(OutcomeFamily::Logistic),
            "cox" => Ok(OutcomeFamily::Cox),
            other => Err(Error::config(
                "family",
                format!("unknown outcome family `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Continuous(Vec<f64>),
    Binary(Vec<f64>),
    Survival { time: Vec<f64>, event: Vec<f64> },
}

impl Outcome {
    pub fn family(&self) -> OutcomeFamily {
        match self {
            Outcome::Continuous(_) => OutcomeFamily::Linear,
            Outcome::Binary(_) => OutcomeFamily::Logistic,
            Outcome::Survival { .. } => OutcomeFamily::Cox,
        }
    }

    fn len(&self) -> usize {
        match self {
            Outcome::Continuous(y) | Outcome::Binary(y) => y.len(),
            Outcome::Survival { time, .. } => time.len(),
        }
    }
}

/// One mediation dataset: exposure `X`, mediators `M` (n×d), covariates
/// `Z` (n×q, possibly q = 0) and an outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub exposure: Vec<f64>,
    pub mediators: DMatrix<f64>,
    pub covariates: DMatrix<f64>,
    pub outcome: Outcome,
}

impl Dataset {
    pub fn new(
        exposure: Vec<f64>,
        mediators: DMatrix<f64>,
        covariates: DMatrix<f64>,
        outcome: Outcome,
    ) -> Result<Self> {
        let data = Self {
            exposure,
            mediators,
            covariates,
            outcome,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.exposure.len()
    }

    pub fn d(&self) -> usize {
        self.mediators.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for found in [
            self.mediators.nrows(),
            self.covariates.nrows(),
            self.outcome.len(),
        ] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        if self.d() == 0 {
            return Err(Error::domain("dataset needs at least one mediator"));
        }
        let bad_cell = |name: &str, row: usize| Error::Data {
            row,
            column: name.to_string(),
            message: "non-finite value".into(),
        };
        if let Some(i) = self.exposure.iter().position(|v| !v.is_finite()) {
            return Err(bad_cell("exposure", i));
        }
        for (k, col) in self.mediators.column_iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(bad_cell(&format!("mediator {k}"), i));
            }
        }
        for (k, col) in self.covariates.column_iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(bad_cell(&format!("covariate {k}"), i));
            }
        }
        match &self.outcome {
            Outcome::Continuous(y) => {
                if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                    return Err(bad_cell("outcome", i));
                }
            }
            Outcome::Binary(y) => {
                if let Some(i) = y.iter().position(|v| *v != 0.0 && *v != 1.0) {
                    return Err(Error::Data {
                        row: i,
                        column: "outcome".into(),
                        message: "binary outcome must be 0 or 1".into(),
                    });
                }
            }
            Outcome::Survival { time, event } => {
                if let Some(i) = time.iter().position(|t| !(*t > 0.0) || !t.is_finite()) {
                    return Err(Error::Data {
                        row: i,
                        column: "time".into(),
                        message: "survival times must be positive".into(),
                    });
                }
                if let Some(i) = event.iter().position(|e| *e != 0.0 && *e != 1.0) {
                    return Err(Error::Data {
                        row: i,
                        column: "event".into(),
                        message: "event indicator must be 0 or 1".into(),
                    });
                }
                if !event.contains(&1.0) {
                    return Err(Error::Degenerate("survival data has no events".into()));
                }
            }
        }
        Ok(())
    }
}

/// Coefficients and standard errors from one regression.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub coefficients: DVector<f64>,
    pub standard_errors: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood (partial for Cox); 0 for least squares.
    pub loglik: f64,
}

/// Per-mediator estimates `(α̂, σ̂_α, β̂, σ̂_β)` with the sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediationFit {
    pub alpha_hat: f64,
    pub se_alpha: f64,
    pub beta_hat: f64,
    pub se_beta: f64,
    pub n: usize,
    pub mediator_index: usize,
}

impl MediationFit {
    pub fn new(
        alpha_hat: f64,
        se_alpha: f64,
        beta_hat: f64,
        se_beta: f64,
        n: usize,
        mediator_index: usize,
    ) -> Result<Self> {
        if !alpha_hat.is_finite() || !beta_hat.is_finite() {
            return Err(Error::Degenerate("non-finite coefficient estimate".into()));
        }
        for (name, se) in [("alpha", se_alpha), ("beta", se_beta)] {
            if !(se > 0.0 && se.is_finite()) {
                return Err(Error::Degenerate(format!(
                    "standard error of {name} must be positive and finite, got {se}"
                )));
            }
        }
        if n < 3 {
            return Err(Error::InsufficientData { n, p: 3 });
        }
        Ok(Self {
            alpha_hat,
            se_alpha,
            beta_hat,
            se_beta,
            n,
            mediator_index,
        })
    }

    pub fn t_alpha(&self) -> f64 {
        self.alpha_hat / self.se_alpha
    }

    pub fn t_beta(&self) -> f64 {
        self.beta_hat / self.se_beta
    }

    pub fn product(&self) -> f64 {
        self.alpha_hat * self.beta_hat
    }
}

/// Fits the mediator models and the joint outcome model and returns one
/// [`MediationFit`] per mediator.
pub fn fit_mediation(data: &Dataset, family: OutcomeFamily) -> Result<Vec<MediationFit>> {
    data.validate()?;
    if data.outcome.family() != family {
        return Err(Error::config(
            "family",
            format!(
                "outcome is {} but {family} was requested",
                data.outcome.family()
            ),
        ));
    }
    let n = data.n();
    let d = data.d();
    let q = data.covariates.ncols();

    // Mediator models share the design (1, X, Z).
    let mediator_design = DMatrix::from_fn(n, 2 + q, |i, j| match j {
        0 => 1.0,
        1 => data.exposure[i],
        _ => data.covariates[(i, j - 2)],
    });
    let ls = LeastSquares::new(&mediator_design)?;
    let mut alpha = Vec::with_capacity(d);
    for k in 0..d {
        let column: Vec<f64> = data.mediators.column(k).iter().copied().collect();
        let fit = ls.fit(&column).map_err(|e| e.for_mediator(k))?;
        alpha.push((fit.coefficients[1], fit.standard_errors[1]));
    }

    let offset = usize::from(family != OutcomeFamily::Cox);
    let p = offset + 1 + d + q;
    let outcome_design = DMatrix::from_fn(n, p, |i, j| {
        if j < offset {
            1.0
        } else if j == offset {
            data.exposure[i]
        } else if j <= offset + d {
            data.mediators[(i, j - offset - 1)]
        } else {
            data.covariates[(i, j - offset - 1 - d)]
        }
    });
    let outcome_fit = match &data.outcome {
        Outcome::Continuous(y) => fit_ols(y, &outcome_design)?,
        Outcome::Binary(y) => fit_logistic(y, &outcome_design)?,
        Outcome::Survival { time, event } => fit_cox(time, event, &outcome_design)?,
    };

    (0..d)
        .map(|k| {
            let j = offset + 1 + k;
            let (a, sa) = alpha[k];
            MediationFit::new(
                a,
                sa,
                outcome_fit.coefficients[j],
                outcome_fit.standard_errors[j],
                n,
                k,
            )
            .map_err(|e| e.for_mediator(k))
        })
        .collect()
}
