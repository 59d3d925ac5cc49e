use nalgebra::{DMatrix, DVector};

use super::ols::equilibrated_cholesky;
use crate::dist::{cholesky_inverse_diagonal, cholesky_solve};
use crate::error::Result;

pub(crate) struct NewtonSettings {
    pub max_iterations: usize,
    pub score_tolerance: f64,
    /// Limit on `|coefficient| × sd(column)`; beyond it the likelihood is
    /// treated as unbounded.
    pub max_effect: f64,
}

impl NewtonSettings {
    pub(crate) fn exceeded(&self, beta: &DVector<f64>, spread: &[f64]) -> Option<usize> {
        beta.iter()
            .zip(spread)
            .position(|(b, s)| !(b.abs() * s <= self.max_effect))
    }
}

/// Standard deviation of each column, or 1 for constant columns.
pub(crate) fn column_spread(design: &DMatrix<f64>) -> Vec<f64> {
    let n = design.nrows() as f64;
    design
        .column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// Solves `information · δ = score`.
pub(crate) fn newton_direction(
    information: &DMatrix<f64>,
    score: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (scale, l) = equilibrated_cholesky(information)?;
    Ok(cholesky_solve(&l, &score.component_div(&scale)).component_div(&scale))
}

/// `sqrt(diag(information⁻¹))`, or `None` when the information is not
/// positive definite.
pub(crate) fn standard_errors(information: &DMatrix<f64>) -> Option<DVector<f64>> {
    let (scale, l) = equilibrated_cholesky(information).ok()?;
    let diag = cholesky_inverse_diagonal(&l).component_div(&scale.component_mul(&scale));
    Some(diag.map(f64::sqrt))
}
