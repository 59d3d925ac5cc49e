//! Sobel-type and adaptive Sobel-type confidence intervals for `αβ`.
//!
//! The ASobel interval keeps the Sobel interval when `T_max ≥ λ_n` and
//! halves its half-width otherwise, since `N_{1−δ/2}(0, 1/4)` is half the
//! standard normal quantile.

use serde::Serialize;

use crate::dist::{phi, two_sided_critical};
use crate::error::Result;
use crate::models::MediationFit;
use crate::testing::{adaptive_branch, sobel_se};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalPair {
    pub mediator_index: usize,
    /// `α̂β̂`.
    pub point: f64,
    /// `σ̂_αβ = √(α̂²σ̂_β² + β̂²σ̂_α²)`.
    pub se_product: f64,
    pub sobel: Interval,
    pub asobel: Interval,
    pub sobel_half_width: f64,
    pub asobel_half_width: f64,
    pub adaptive_branch: bool,
    /// Nominal level `1 − δ`.
    pub level: f64,
    /// `α̂ = β̂ = 0`: both intervals collapse to the point 0.
    pub degenerate: bool,
}

fn centred(point: f64, half: f64) -> Interval {
    Interval {
        lo: point - half,
        hi: point + half,
    }
}

/// `α̂β̂ ± z_{1−δ/2} σ̂_αβ`.
pub fn ci_sobel(fit: &MediationFit, delta: f64) -> Result<Interval> {
    let z = two_sided_critical(delta)?;
    Ok(centred(fit.product(), z * sobel_se(fit)))
}

/// Both intervals with the branch flag.
pub fn ci_asobel(fit: &MediationFit, delta: f64) -> Result<IntervalPair> {
    let z = two_sided_critical(delta)?;
    let branch = adaptive_branch(fit)?;
    let point = fit.product();
    let se_product = sobel_se(fit);
    let half = z * se_product;
    let asobel_half = if branch { 0.5 * half } else { half };
    let sobel = centred(point, half);
    let asobel = centred(point, asobel_half);
    Ok(IntervalPair {
        mediator_index: fit.mediator_index,
        point,
        se_product,
        sobel,
        asobel,
        sobel_half_width: half,
        asobel_half_width: asobel_half,
        adaptive_branch: branch,
        level: 1.0 - delta,
        degenerate: fit.alpha_hat == 0.0 && fit.beta_hat == 0.0,
    })
}

/// Asymptotic Sobel coverage at `αβ = 0` under `H00`: `2Φ(2 z_{1−δ/2}) − 1`.
pub fn sobel_coverage_h00(delta: f64) -> Result<f64> {
    let z = two_sided_critical(delta)?;
    Ok(2.0 * phi(2.0 * z) - 1.0)
}
