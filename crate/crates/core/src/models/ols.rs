use nalgebra::{DMatrix, DVector};

use super::FitResult;
use crate::dist::{cholesky, cholesky_inverse_diagonal, cholesky_solve};
use crate::error::{Error, Result};

/// A factored least-squares design, reusable across responses.
///
/// The cross-product matrix is equilibrated to unit diagonal before
/// factoring, so singularity detection does not depend on column scale.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares<'a> {
    design: &'a DMatrix<f64>,
    scale: DVector<f64>,
    factor: DMatrix<f64>,
    inv_diag: DVector<f64>,
}

impl<'a> LeastSquares<'a> {
    pub(crate) fn new(design: &'a DMatrix<f64>) -> Result<Self> {
        let (n, p) = design.shape();
        if n <= p {
            return Err(Error::InsufficientData { n, p });
        }
        let xtx = design.tr_mul(design);
        let (scale, factor) = equilibrated_cholesky(&xtx)?;
        let inv_diag =
            cholesky_inverse_diagonal(&factor).component_div(&scale.component_mul(&scale));
        Ok(Self {
            design,
            scale,
            factor,
            inv_diag,
        })
    }

    pub(crate) fn fit(&self, response: &[f64]) -> Result<FitResult> {
        let (n, p) = self.design.shape();
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: response.len(),
            });
        }
        let y = DVector::from_column_slice(response);
        let xty = self.design.tr_mul(&y).component_div(&self.scale);
        let coefficients = cholesky_solve(&self.factor, &xty).component_div(&self.scale);
        let residuals = &y - self.design * &coefficients;
        let mut sse = residuals.norm_squared();
        // An exact fit leaves only rounding noise in the residuals.
        let y_rms = (y.norm_squared() / n as f64).sqrt();
        if (sse / n as f64).sqrt() <= 1e-12 * y_rms.max(f64::MIN_POSITIVE) {
            sse = 0.0;
        }
        let s2 = sse / (n - p) as f64;
        let standard_errors = self.inv_diag.map(|v| (s2 * v).sqrt());
        Ok(FitResult {
            coefficients,
            standard_errors,
            converged: true,
            iterations: 1,
            loglik: 0.0,
        })
    }
}

/// Cholesky factor of `D^{-1/2} A D^{-1/2}` together with `sqrt(diag(A))`.
pub(crate) fn equilibrated_cholesky(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = a.nrows();
    let mut scale = DVector::zeros(p);
    for j in 0..p {
        let d = a[(j, j)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularDesign { column: j });
        }
        scale[j] = d.sqrt();
    }
    let scaled = DMatrix::from_fn(p, p, |i, j| a[(i, j)] / (scale[i] * scale[j]));
    match cholesky(&scaled) {
        Ok(l) => Ok((scale, l)),
        Err(Error::NotPositiveDefinite { pivot, .. }) => {
            Err(Error::SingularDesign { column: pivot })
        }
        Err(e) => Err(e),
    }
}

/// Ordinary least squares with classical standard errors
/// `sqrt(s² diag((XᵀX)⁻¹))`, `s² = SSE/(n − p)`.
pub fn fit_ols(response: &[f64], design: &DMatrix<f64>) -> Result<FitResult> {
    LeastSquares::new(design)?.fit(response)
}
