use nalgebra::{DMatrix, DVector};

use super::newton::{column_spread, newton_direction, standard_errors, NewtonSettings};
use super::FitResult;
use crate::error::{Error, Result};

pub(crate) const SETTINGS: NewtonSettings = NewtonSettings {
    max_iterations: 50,
    score_tolerance: 1e-8,
    max_effect: 50.0,
};

/// Observations ordered by decreasing time, with tie groups delimited.
struct RiskOrder {
    order: Vec<usize>,
    /// `(start, end)` ranges into `order` sharing one time.
    groups: Vec<(usize, usize)>,
}

impl RiskOrder {
    fn new(time: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..time.len()).collect();
        order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=order.len() {
            if i == order.len() || time[order[i]] != time[order[start]] {
                groups.push((start, i));
                start = i;
            }
        }
        Self { order, groups }
    }
}

struct Evaluation {
    loglik: f64,
    score: DVector<f64>,
    information: DMatrix<f64>,
}

/// Breslow partial log-likelihood with score and observed information.
fn evaluate(
    risk: &RiskOrder,
    event: &[f64],
    design: &DMatrix<f64>,
    beta: &DVector<f64>,
    derivatives: bool,
) -> Evaluation {
    let p = design.ncols();
    let eta = design * beta;
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s0 = 0.0;
    let mut s1 = DVector::<f64>::zeros(p);
    let mut s2 = DMatrix::<f64>::zeros(p, p);
    let mut loglik = 0.0;
    let mut score = DVector::<f64>::zeros(p);
    let mut information = DMatrix::<f64>::zeros(p, p);
    let mut xbar = DVector::<f64>::zeros(p);
    for &(start, end) in &risk.groups {
        for &i in &risk.order[start..end] {
            let w = (eta[i] - shift).exp();
            s0 += w;
            if derivatives {
                for a in 0..p {
                    let xa = design[(i, a)];
                    s1[a] += w * xa;
                    for b in 0..=a {
                        s2[(a, b)] += w * xa * design[(i, b)];
                    }
                }
            }
        }
        let deaths = risk.order[start..end]
            .iter()
            .filter(|&&i| event[i] != 0.0)
            .count();
        if deaths == 0 {
            continue;
        }
        let log_s0 = s0.ln() + shift;
        for &i in &risk.order[start..end] {
            if event[i] != 0.0 {
                loglik += eta[i] - log_s0;
            }
        }
        if derivatives {
            let d = deaths as f64;
            for a in 0..p {
                xbar[a] = s1[a] / s0;
            }
            for &i in &risk.order[start..end] {
                if event[i] != 0.0 {
                    for a in 0..p {
                        score[a] += design[(i, a)] - xbar[a];
                    }
                }
            }
            for a in 0..p {
                for b in 0..=a {
                    let v = d * (s2[(a, b)] / s0 - xbar[a] * xbar[b]);
                    information[(a, b)] += v;
                }
            }
        }
    }
    if derivatives {
        for a in 0..p {
            for b in 0..a {
                information[(b, a)] = information[(a, b)];
            }
        }
    }
    Evaluation {
        loglik,
        score,
        information,
    }
}

/// Monotone partial likelihood: every event has the largest linear
/// predictor in its risk set and at least one risk set is strictly
/// ordered, so scaling `β` up never lowers the likelihood.
fn perfectly_ordered(
    risk: &RiskOrder,
    event: &[f64],
    design: &DMatrix<f64>,
    beta: &DVector<f64>,
) -> bool {
    if beta.iter().all(|b| *b == 0.0) {
        return false;
    }
    let eta = design * beta;
    let tol = 1e-10 * eta.amax().max(1e-300);
    let mut running_max = f64::NEG_INFINITY;
    let mut running_min = f64::INFINITY;
    let mut strict = false;
    for &(start, end) in &risk.groups {
        for &i in &risk.order[start..end] {
            running_max = running_max.max(eta[i]);
            running_min = running_min.min(eta[i]);
        }
        for &i in &risk.order[start..end] {
            if event[i] != 0.0 {
                if eta[i] < running_max - tol {
                    return false;
                }
                strict |= running_min < eta[i] - tol;
            }
        }
    }
    strict
}

/// Cox proportional-hazards fit maximising the Breslow partial likelihood by
/// Newton–Raphson with step halving. The model has no intercept.
///
/// When the score vanishes at a point where the information is singular
/// (for example an all-zero covariate), the fit is returned with infinite
/// standard errors.
pub fn fit_cox(time: &[f64], event: &[f64], design: &DMatrix<f64>) -> Result<FitResult> {
    let (n, p) = design.shape();
    for len in [time.len(), event.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if let Some(i) = time.iter().position(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Data {
            row: i,
            column: "time".into(),
            message: "survival times must be positive and finite".into(),
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
        return Err(Error::Degenerate("no events in survival data".into()));
    }
    if n <= p {
        return Err(Error::InsufficientData { n, p });
    }
    let risk = RiskOrder::new(time);
    let spread = column_spread(design);
    let mut beta = DVector::zeros(p);
    let mut eval = evaluate(&risk, event, design, &beta, true);
    for iteration in 0..=SETTINGS.max_iterations {
        let score_norm = eval.score.amax();
        if score_norm < SETTINGS.score_tolerance {
            if perfectly_ordered(&risk, event, design, &beta) {
                let index = (0..p)
                    .max_by(|&a, &b| {
                        (beta[a].abs() * spread[a]).total_cmp(&(beta[b].abs() * spread[b]))
                    })
                    .unwrap_or(0);
                return Err(Error::Divergence { index });
            }
            let standard_errors = standard_errors(&eval.information)
                .unwrap_or_else(|| DVector::from_element(p, f64::INFINITY));
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
        let direction = match newton_direction(&eval.information, &eval.score) {
            Ok(d) => d,
            Err(Error::SingularDesign { column }) => {
                return Err(Error::Divergence { index: column })
            }
            Err(e) => return Err(e),
        };
        let mut step = 1.0;
        let mut candidate = &beta + &direction;
        let mut ll = evaluate(&risk, event, design, &candidate, false).loglik;
        for _ in 0..40 {
            if ll >= eval.loglik - 1e-12 * eval.loglik.abs().max(1.0) {
                break;
            }
            step *= 0.5;
            candidate = &beta + &direction * step;
            ll = evaluate(&risk, event, design, &candidate, false).loglik;
        }
        beta = candidate;
        if let Some(index) = SETTINGS.exceeded(&beta, &spread) {
            return Err(Error::Divergence { index });
        }
        eval = evaluate(&risk, event, design, &beta, true);
    }
    unreachable!("loop returns on its last iteration")
}
