use nalgebra::{DMatrix, DVector};

use super::newton::{column_spread, newton_direction, standard_errors, NewtonSettings};
use super::FitResult;
use crate::error::{Error, Result};

pub(crate) const SETTINGS: NewtonSettings = NewtonSettings {
    max_iterations: 100,
    score_tolerance: 1e-8,
    max_effect: 50.0,
};

fn log1p_exp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

struct Evaluation {
    loglik: f64,
    score: DVector<f64>,
    information: DMatrix<f64>,
}

fn evaluate(y: &[f64], design: &DMatrix<f64>, beta: &DVector<f64>) -> Evaluation {
    let (n, p) = design.shape();
    let eta = design * beta;
    let mut loglik = 0.0;
    let mut resid = DVector::zeros(n);
    let mut weighted = design.clone();
    for i in 0..n {
        let e = eta[i];
        loglik += y[i] * e - log1p_exp(e);
        let prob = expit(e);
        resid[i] = y[i] - prob;
        let w = (prob * (1.0 - prob)).sqrt();
        for j in 0..p {
            weighted[(i, j)] *= w;
        }
    }
    Evaluation {
        loglik,
        score: design.tr_mul(&resid),
        information: weighted.tr_mul(&weighted),
    }
}

/// Complete separation: every observation lies strictly on its own side of
/// the fitted hyperplane, so no finite maximiser exists.
fn perfectly_classified(y: &[f64], design: &DMatrix<f64>, beta: &DVector<f64>) -> bool {
    if beta.iter().all(|b| *b == 0.0) {
        return false;
    }
    let eta = design * beta;
    eta.iter()
        .zip(y)
        .all(|(e, yi)| if *yi == 1.0 { *e > 0.0 } else { *e < 0.0 })
}

fn loglik_only(y: &[f64], design: &DMatrix<f64>, beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(y)
        .map(|(e, yi)| yi * e - log1p_exp(*e))
        .sum()
}

/// Bernoulli maximum likelihood by Newton–Raphson with step halving.
///
/// Standard errors come from the inverse observed information at the
/// optimum.
pub fn fit_logistic(response: &[f64], design: &DMatrix<f64>) -> Result<FitResult> {
    let (n, p) = design.shape();
    if response.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: response.len(),
        });
    }
    if n <= p {
        return Err(Error::InsufficientData { n, p });
    }
    if let Some((i, _)) = response
        .iter()
        .enumerate()
        .find(|(_, v)| **v != 0.0 && **v != 1.0)
    {
        return Err(Error::Data {
            row: i,
            column: "outcome".into(),
            message: "binary outcome must be 0 or 1".into(),
        });
    }
    let events: f64 = response.iter().sum();
    if events == 0.0 || events == n as f64 {
        return Err(Error::Separation("outcome takes a single value".into()));
    }
    let spread = column_spread(design);
    let mut beta = DVector::zeros(p);
    let mut eval = evaluate(response, design, &beta);
    for iteration in 0..=SETTINGS.max_iterations {
        let score_norm = eval.score.amax();
        if perfectly_classified(response, design, &beta) {
            return Err(Error::Separation(
                "linear predictor separates the outcome classes".into(),
            ));
        }
        if score_norm < SETTINGS.score_tolerance {
            let standard_errors = standard_errors(&eval.information)
                .ok_or_else(|| Error::Separation("information singular at optimum".into()))?;
            return Ok(FitResult {
                coefficients: beta,
                standard_errors,
                converged: true,
                iterations: iteration,
                loglik: eval.loglik,
            });
        }
        if iteration == SETTINGS.max_iterations {
            return Err(Error::Convergence {
                iterations: iteration,
                score_norm,
            });
        }
        let direction = newton_direction(&eval.information, &eval.score)
            .map_err(|_| Error::Separation("information matrix near-singular".into()))?;
        let mut step = 1.0;
        let mut candidate = &beta + &direction;
        let mut ll = loglik_only(response, design, &candidate);
        for _ in 0..40 {
            if ll >= eval.loglik - 1e-12 * eval.loglik.abs().max(1.0) {
                break;
            }
            step *= 0.5;
            candidate = &beta + &direction * step;
            ll = loglik_only(response, design, &candidate);
        }
        beta = candidate;
        if let Some(j) = SETTINGS.exceeded(&beta, &spread) {
            return Err(Error::Separation(format!(
                "coefficient {j} reached {:.3e}",
                beta[j]
            )));
        }
        eval = evaluate(response, design, &beta);
    }
    unreachable!("loop returns on its last iteration")
}
