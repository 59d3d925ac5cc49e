//! Testing several mediators at once with the Bonferroni threshold `δ/d`.
//!
//! Mediator `k` is declared active by a method when its p-value is below
//! `δ/d`. Because `P_AJS ≤ P_JS` and `P_ASobel ≤ P_Sobel` hold mediator by
//! mediator, the adaptive rejection sets always contain the classical ones.
//!
//! Power over replications is the mean per-signal detection rate
//! `|Ω̂ ∩ Ω| / |Ω|`, averaged over replications.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::MediationFit;
use crate::testing::{test_mediator, Method, TestReport};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiTestResult {
    pub d: usize,
    pub delta: f64,
    /// `δ/d`.
    pub threshold: f64,
    pub per_mediator: Vec<TestReport>,
    rejected: [Vec<usize>; 4],
}

fn slot(method: Method) -> usize {
    match method {
        Method::Sobel => 0,
        Method::Js => 1,
        Method::ASobel => 2,
        Method::Ajs => 3,
    }
}

impl MultiTestResult {
    /// Indices (0-based, ascending) of mediators rejected by `method`.
    pub fn rejected(&self, method: Method) -> &[usize] {
        &self.rejected[slot(method)]
    }
}

pub fn test_all(fits: &[MediationFit], delta: f64) -> Result<MultiTestResult> {
    let first = fits
        .first()
        .ok_or_else(|| Error::domain("multiple testing needs at least one mediator"))?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "level must lie in (0, 1), got {delta}"
        )));
    }
    if let Some(other) = fits.iter().find(|f| f.n != first.n) {
        return Err(Error::HeterogeneousSampleSize {
            first: first.n,
            other: other.n,
        });
    }
    let d = fits.len();
    let threshold = delta / d as f64;
    let per_mediator = fits
        .iter()
        .enumerate()
        .map(|(k, f)| test_mediator(f).map_err(|e| e.for_mediator(k)))
        .collect::<Result<Vec<_>>>()?;
    let rejected = Method::ALL.map(|m| {
        (0..d)
            .filter(|&k| per_mediator[k].p_value(m) < threshold)
            .collect()
    });
    Ok(MultiTestResult {
        d,
        delta,
        threshold,
        per_mediator,
        rejected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRates {
    pub method: Method,
    pub fwer: f64,
    pub fwer_se: f64,
    /// `None` when there are no true signals.
    pub power: Option<f64>,
    pub power_se: Option<f64>,
    pub replications: usize,
}

/// Streaming accumulator for FWER and power over replications.
#[derive(Clone, Debug, PartialEq)]
pub struct FwerTally {
    truth: BTreeSet<usize>,
    d: usize,
    replications: usize,
    false_rejections: [usize; 4],
    detection_sum: [f64; 4],
    detection_sq_sum: [f64; 4],
}

impl FwerTally {
    pub fn new(truth: &BTreeSet<usize>, d: usize) -> Result<Self> {
        if let Some(&k) = truth.iter().find(|&&k| k >= d) {
            return Err(Error::domain(format!(
                "true signal index {k} outside 0..{d}"
            )));
        }
        Ok(Self {
            truth: truth.clone(),
            d,
            replications: 0,
            false_rejections: [0; 4],
            detection_sum: [0.0; 4],
            detection_sq_sum: [0.0; 4],
        })
    }

    pub fn add(&mut self, result: &MultiTestResult) -> Result<()> {
        if result.d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: result.d,
            });
        }
        self.replications += 1;
        for m in Method::ALL {
            let s = slot(m);
            let rejected = result.rejected(m);
            if rejected.iter().any(|k| !self.truth.contains(k)) {
                self.false_rejections[s] += 1;
            }
            if !self.truth.is_empty() {
                let hits = rejected.iter().filter(|k| self.truth.contains(k)).count();
                let rate = hits as f64 / self.truth.len() as f64;
                self.detection_sum[s] += rate;
                self.detection_sq_sum[s] += rate * rate;
            }
        }
        Ok(())
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn rates(&self) -> Result<Vec<ErrorRates>> {
        if self.replications == 0 {
            return Err(Error::domain("no replications recorded"));
        }
        let r = self.replications as f64;
        Ok(Method::ALL
            .iter()
            .map(|&m| {
                let s = slot(m);
                let fwer = self.false_rejections[s] as f64 / r;
                let (power, power_se) = if self.truth.is_empty() {
                    (None, None)
                } else {
                    let mean = self.detection_sum[s] / r;
                    let var = (self.detection_sq_sum[s] / r - mean * mean).max(0.0);
                    (Some(mean), Some((var / r).sqrt()))
                };
                ErrorRates {
                    method: m,
                    fwer,
                    fwer_se: (fwer * (1.0 - fwer) / r).sqrt(),
                    power,
                    power_se,
                    replications: self.replications,
                }
            })
            .collect())
    }
}

/// FWER (share of replications with a rejection outside `truth`) and
/// power (mean per-signal rejection rate) for each method.
pub fn fwer_and_power(
    truth: &BTreeSet<usize>,
    results: &[MultiTestResult],
) -> Result<Vec<ErrorRates>> {
    let first = results
        .first()
        .ok_or_else(|| Error::domain("at least one replication is required"))?;
    let mut tally = FwerTally::new(truth, first.d)?;
    for r in results {
        tally.add(r)?;
    }
    tally.rates()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngStream;
    use crate::testing::p_ajs;

    fn fits_from_t(ts: &[(f64, f64)], n: usize) -> Vec<MediationFit> {
        ts.iter()
            .enumerate()
            .map(|(k, (a, b))| MediationFit::new(*a, 1.0, *b, 1.0, n, k).unwrap())
            .collect()
    }

    fn rates_for(rates: &[ErrorRates], m: Method) -> ErrorRates {
        *rates.iter().find(|r| r.method == m).unwrap()
    }

    #[test]
    fn single_mediator_matches_level_delta() {
        let fits = fits_from_t(&[(2.5, 2.1)], 500);
        let res = test_all(&fits, 0.05).unwrap();
        assert_eq!(res.threshold, 0.05);
        let (p, _) = p_ajs(&fits[0]).unwrap();
        assert_eq!(res.rejected(Method::Ajs).is_empty(), p >= 0.05);
        assert_eq!(res.per_mediator[0], test_mediator(&fits[0]).unwrap());
    }

    #[test]
    fn null_p_values_reject_nothing() {
        let fits = fits_from_t(&[(0.0, 0.0); 10], 500);
        let res = test_all(&fits, 0.05).unwrap();
        for m in Method::ALL {
            assert!(res.rejected(m).is_empty());
        }
    }

    #[test]
    fn errors() {
        assert!(test_all(&[], 0.05).is_err());
        let mut fits = fits_from_t(&[(1.0, 1.0), (2.0, 2.0)], 500);
        fits[1].n = 400;
        assert!(matches!(
            test_all(&fits, 0.05),
            Err(Error::HeterogeneousSampleSize {
                first: 500,
                other: 400
            })
        ));
        let truth: BTreeSet<usize> = [5].into();
        assert!(FwerTally::new(&truth, 3).is_err());
        assert!(fwer_and_power(&truth, &[]).is_err());
    }

    #[test]
    fn bonferroni_threshold() {
        // T = 2.1 on both: P_JS = 0.0357 > 0.05/2, but squared it passes.
        let fits = fits_from_t(&[(2.1, 2.1), (8.0, 8.0)], 500);
        let res = test_all(&fits, 0.05).unwrap();
        assert_eq!(res.threshold, 0.025);
        assert_eq!(res.rejected(Method::Js), &[1]);
        assert_eq!(res.rejected(Method::Ajs), &[0, 1]);
    }

    #[test]
    fn all_signals_have_zero_fwer() {
        let fits = fits_from_t(&[(8.0, 8.0), (0.0, 0.0)], 500);
        let res = test_all(&fits, 0.05).unwrap();
        let truth: BTreeSet<usize> = [0, 1].into();
        for r in fwer_and_power(&truth, &[res]).unwrap() {
            assert_eq!(r.fwer, 0.0);
        }
    }

    #[test]
    fn exact_recovery_has_unit_power() {
        let fits = fits_from_t(&[(8.0, 8.0), (0.0, 0.0), (9.0, 7.0)], 500);
        let res = test_all(&fits, 0.05).unwrap();
        let truth: BTreeSet<usize> = [0, 2].into();
        let rates = fwer_and_power(&truth, &[res]).unwrap();
        let ajs = rates_for(&rates, Method::Ajs);
        assert_eq!(ajs.fwer, 0.0);
        assert_eq!(ajs.power, Some(1.0));
        let none = fwer_and_power(&BTreeSet::new(), &[test_all(&fits, 0.05).unwrap()]).unwrap();
        assert_eq!(rates_for(&none, Method::Ajs).power, None);
        assert_eq!(rates_for(&none, Method::Ajs).fwer, 1.0);
    }

    #[test]
    fn adaptive_sets_contain_classical_and_are_deterministic() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..2000 {
            let ts: Vec<(f64, f64)> = (0..6)
                .map(|_| (3.0 * rng.next_std_normal(), 3.0 * rng.next_std_normal()))
                .collect();
            let fits = fits_from_t(&ts, 800);
            let res = test_all(&fits, 0.05).unwrap();
            let js: BTreeSet<_> = res.rejected(Method::Js).iter().collect();
            let ajs: BTreeSet<_> = res.rejected(Method::Ajs).iter().collect();
            assert!(js.is_subset(&ajs));
            let sobel: BTreeSet<_> = res.rejected(Method::Sobel).iter().collect();
            let asobel: BTreeSet<_> = res.rejected(Method::ASobel).iter().collect();
            assert!(sobel.is_subset(&asobel));
            assert_eq!(res, test_all(&fits, 0.05).unwrap());
        }
    }
}
