//! Mediation analysis with adaptive joint significance (AJS) and adaptive
//! Sobel (ASobel) tests.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: normal CDF/quantile, seeded streams, multivariate normal draws
//! - [`models`]: OLS, logistic and Cox fitters and the per-mediator fit
//! - [`testing`]: Sobel, JS, ASobel and AJS p-values and their closed-form
//!   size and power calculators
//! - [`intervals`]: Sobel and ASobel confidence intervals for `αβ`
//! - [`multitest`]: Bonferroni-controlled testing over several mediators
//! - [`simulate`]: data generators and Monte Carlo drivers
//! - [`cli`]: the `medtest` command-line front end
//!
//! ```
//! use medtest::models::MediationFit;
//! use medtest::testing::test_mediator;
//!
//! let fit = MediationFit::new(0.12, 0.04, 0.2, 0.07, 500, 0).unwrap();
//! let report = test_mediator(&fit).unwrap();
//! assert!(report.p_ajs <= report.p_js);
//! assert!(report.p_asobel <= report.p_sobel);
//! ```

// Checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
mod error;
pub mod intervals;
pub mod models;
pub mod multitest;
pub mod simulate;
pub mod testing;

pub use error::{Error, Result};
