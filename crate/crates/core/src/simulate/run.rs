use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, StudyKind};
use super::generate::{calibrated, Generator};
use crate::error::{Error, Result};
use crate::intervals::{ci_asobel, IntervalPair};
use crate::models::fit_mediation;
use crate::multitest::{test_all, ErrorRates, FwerTally, MultiTestResult};
use crate::testing::Method;

/// Share of failed replications above which a summary is flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.01;

/// Worker settings; results do not depend on them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn threads(threads: usize) -> Self {
        Self {
            threads: Some(threads),
        }
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(0) => Err(Error::config("threads", "must be at least 1")),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::config("threads", e.to_string()))?;
                Ok(pool.install(job))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub method: Method,
    pub rate: f64,
    pub standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub mediator_index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sobel_cp: f64,
    pub sobel_cp_se: f64,
    pub asobel_cp: f64,
    pub asobel_cp_se: f64,
    pub sobel_lci: f64,
    pub asobel_lci: f64,
    /// Replications with `α̂ = β̂ = 0`, left out of the averages.
    pub degenerate: usize,
}

/// Plug-in quantities for the theoretical power formulas, per mediator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlugIn {
    /// Monte Carlo mean of `T_α`.
    pub mu_alpha: f64,
    pub mu_beta: f64,
    /// Share of replications with `T_max ≥ λ_n`.
    pub prob_tmax_ge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimates {
    /// Rejection rates; `label` is "size" when `αβ = 0`.
    SizePower {
        label: String,
        rates: Vec<RateEstimate>,
    },
    Fwer {
        rates: Vec<ErrorRates>,
    },
    Coverage {
        rows: Vec<CoverageRow>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scenario: ScenarioConfig,
    pub estimates: Estimates,
    pub plug_in: Vec<PlugIn>,
    pub reps_requested: usize,
    pub reps_used: usize,
    pub failures: usize,
    /// First failure message, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    /// More than 1% of replications failed to fit.
    pub flagged: bool,
    /// Wall-clock time; the only field that varies between runs.
    pub elapsed_seconds: f64,
}

impl SimulationSummary {
    pub fn kind(&self) -> StudyKind {
        match self.estimates {
            Estimates::SizePower { .. } => StudyKind::SizePower,
            Estimates::Fwer { .. } => StudyKind::Fwer,
            Estimates::Coverage { .. } => StudyKind::Coverage,
        }
    }

    /// Copy with the timing zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            elapsed_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn rate(&self, method: Method) -> Option<f64> {
        match &self.estimates {
            Estimates::SizePower { rates, .. } => {
                rates.iter().find(|r| r.method == method).map(|r| r.rate)
            }
            _ => None,
        }
    }

    pub fn error_rates(&self, method: Method) -> Option<ErrorRates> {
        match &self.estimates {
            Estimates::Fwer { rates } => rates.iter().find(|r| r.method == method).copied(),
            _ => None,
        }
    }

    pub fn coverage(&self) -> &[CoverageRow] {
        match &self.estimates {
            Estimates::Coverage { rows } => rows,
            _ => &[],
        }
    }
}

struct Replication {
    tests: MultiTestResult,
    intervals: Vec<IntervalPair>,
}

/// Replication outcomes in replication order, with fitter failures kept
/// as messages.
fn replicate(
    config: &ScenarioConfig,
    options: &RunOptions,
    with_intervals: bool,
) -> Result<(
    ScenarioConfig,
    Vec<std::result::Result<Replication, String>>,
)> {
    let config = calibrated(config)?;
    let generator = Generator::new(&config)?;
    let delta = config.delta;
    let family = config.family;
    let run_one = |rep: u64| -> Result<std::result::Result<Replication, String>> {
        let data = generator.dataset(rep)?;
        let fits = match fit_mediation(&data, family) {
            Ok(f) => f,
            Err(e) if e.is_numerical() => return Ok(Err(format!("replication {rep}: {e}"))),
            Err(e) => return Err(e),
        };
        let tests = test_all(&fits, delta)?;
        let intervals = if with_intervals {
            fits.iter()
                .map(|f| ci_asobel(f, delta))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Ok(Replication { tests, intervals }))
    };
    let reps = config.reps as u64;
    let outcomes = options.install(|| {
        (0..reps)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<Vec<_>>>()
    })??;
    Ok((config, outcomes))
}

struct Common {
    scenario: ScenarioConfig,
    reps_requested: usize,
    reps_used: usize,
    failures: usize,
    first_failure: Option<String>,
    plug_in: Vec<PlugIn>,
}

fn common(
    scenario: ScenarioConfig,
    outcomes: &[std::result::Result<Replication, String>],
) -> Result<(Common, Vec<&Replication>)> {
    let good: Vec<&Replication> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = outcomes.len() - good.len();
    let first_failure = outcomes.iter().find_map(|o| o.as_ref().err().cloned());
    if good.is_empty() {
        return Err(Error::Degenerate(format!(
            "every replication failed: {}",
            first_failure.unwrap_or_default()
        )));
    }
    let d = scenario.d();
    let used = good.len() as f64;
    let plug_in = (0..d)
        .map(|k| {
            let (mut ta, mut tb, mut ge) = (0.0, 0.0, 0usize);
            for rep in &good {
                let r = &rep.tests.per_mediator[k];
                ta += r.t_alpha;
                tb += r.t_beta;
                ge += usize::from(!r.adaptive_branch);
            }
            PlugIn {
                mu_alpha: ta / used,
                mu_beta: tb / used,
                prob_tmax_ge: ge as f64 / used,
            }
        })
        .collect();
    Ok((
        Common {
            reps_requested: scenario.reps,
            scenario,
            reps_used: good.len(),
            failures,
            first_failure,
            plug_in,
        },
        good,
    ))
}

fn finish(common: Common, estimates: Estimates, started: Instant) -> SimulationSummary {
    let flagged = common.failures as f64 > FAILURE_FLAG_SHARE * common.reps_requested as f64;
    SimulationSummary {
        scenario: common.scenario,
        estimates,
        plug_in: common.plug_in,
        reps_requested: common.reps_requested,
        reps_used: common.reps_used,
        failures: common.failures,
        first_failure: common.first_failure,
        flagged,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    }
}

fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Single-mediator rejection rates at level `δ` for all four tests.
pub fn run_size_power(config: &ScenarioConfig) -> Result<SimulationSummary> {
    run_size_power_with(config, &RunOptions::default())
}

pub fn run_size_power_with(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<SimulationSummary> {
    if config.d() != 1 {
        return Err(Error::config(
            "alpha",
            "size/power runs take exactly one mediator",
        ));
    }
    let started = Instant::now();
    let (scenario, outcomes) = replicate(config, options, false)?;
    let (common, good) = common(scenario, &outcomes)?;
    let delta = common.scenario.delta;
    let rates = Method::ALL
        .iter()
        .map(|&m| {
            let hits = good
                .iter()
                .filter(|r| r.tests.per_mediator[0].p_value(m) < delta)
                .count();
            let rate = hits as f64 / good.len() as f64;
            RateEstimate {
                method: m,
                rate,
                standard_error: binomial_se(rate, good.len()),
            }
        })
        .collect();
    let label = if common.scenario.truth().is_empty() {
        "size"
    } else {
        "power"
    };
    let estimates = Estimates::SizePower {
        label: label.into(),
        rates,
    };
    Ok(finish(common, estimates, started))
}

/// FWER and mean per-signal power with the Bonferroni threshold `δ/d`.
pub fn run_fwer(config: &ScenarioConfig) -> Result<SimulationSummary> {
    run_fwer_with(config, &RunOptions::default())
}

pub fn run_fwer_with(config: &ScenarioConfig, options: &RunOptions) -> Result<SimulationSummary> {
    if config.d() < 2 {
        return Err(Error::config(
            "alpha",
            "FWER runs need at least two mediators",
        ));
    }
    let started = Instant::now();
    let (scenario, outcomes) = replicate(config, options, false)?;
    let (common, good) = common(scenario, &outcomes)?;
    let mut tally = FwerTally::new(&common.scenario.truth(), common.scenario.d())?;
    for rep in &good {
        tally.add(&rep.tests)?;
    }
    let estimates = Estimates::Fwer {
        rates: tally.rates()?,
    };
    Ok(finish(common, estimates, started))
}

/// Per-mediator coverage of `α_k β_k` and mean interval length.
pub fn run_coverage(config: &ScenarioConfig) -> Result<SimulationSummary> {
    run_coverage_with(config, &RunOptions::default())
}

pub fn run_coverage_with(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<SimulationSummary> {
    let started = Instant::now();
    let (scenario, outcomes) = replicate(config, options, true)?;
    let (common, good) = common(scenario, &outcomes)?;
    let rows = (0..common.scenario.d())
        .map(|k| {
            let truth = common.scenario.alpha[k] * common.scenario.beta[k];
            let (mut sobel_in, mut asobel_in, mut used) = (0usize, 0usize, 0usize);
            let (mut sobel_len, mut asobel_len) = (0.0, 0.0);
            let mut degenerate = 0;
            for rep in &good {
                let ci = &rep.intervals[k];
                if ci.degenerate {
                    degenerate += 1;
                    continue;
                }
                used += 1;
                sobel_in += usize::from(ci.sobel.contains(truth));
                asobel_in += usize::from(ci.asobel.contains(truth));
                sobel_len += ci.sobel.width();
                asobel_len += ci.asobel.width();
            }
            let u = used.max(1) as f64;
            let (sobel_cp, asobel_cp) = (sobel_in as f64 / u, asobel_in as f64 / u);
            CoverageRow {
                mediator_index: k,
                alpha: common.scenario.alpha[k],
                beta: common.scenario.beta[k],
                sobel_cp,
                sobel_cp_se: binomial_se(sobel_cp, used.max(1)),
                asobel_cp,
                asobel_cp_se: binomial_se(asobel_cp, used.max(1)),
                sobel_lci: sobel_len / u,
                asobel_lci: asobel_len / u,
                degenerate,
            }
        })
        .collect();
    Ok(finish(common, Estimates::Coverage { rows }, started))
}

pub fn run_study(
    config: &ScenarioConfig,
    kind: StudyKind,
    options: &RunOptions,
) -> Result<SimulationSummary> {
    match kind {
        StudyKind::SizePower => run_size_power_with(config, options),
        StudyKind::Fwer => run_fwer_with(config, options),
        StudyKind::Coverage => run_coverage_with(config, options),
    }
}

/// Per-replication p-values of one mediator, in replication order, with
/// failed replications skipped. Feeds Q-Q and uniformity checks.
pub fn simulate_pvalues(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<Vec<crate::testing::TestReport>> {
    let (_, outcomes) = replicate(config, options, false)?;
    Ok(outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .map(|r| r.tests.per_mediator[0])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::OutcomeFamily;

    #[test]
    fn single_replication_gives_binary_estimates() {
        let c = ScenarioConfig::single(OutcomeFamily::Linear, 200, 0.3, 0.3).with_reps(1);
        let s = run_size_power(&c).unwrap();
        for m in Method::ALL {
            let r = s.rate(m).unwrap();
            assert!(r == 0.0 || r == 1.0);
        }
        let Estimates::SizePower { rates, label } = &s.estimates else {
            unreachable!()
        };
        assert_eq!(label, "power");
        assert!(rates.iter().all(|r| r.standard_error == 0.0));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let c = ScenarioConfig::multiple(
            OutcomeFamily::Logistic,
            300,
            vec![0.2, 0.0, 0.3],
            vec![0.3, 0.2, 0.0],
        )
        .with_reps(60)
        .with_seed(9);
        let a = run_fwer_with(&c, &RunOptions::threads(1)).unwrap();
        let b = run_fwer_with(&c, &RunOptions::threads(4)).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        let a = run_coverage_with(&c, &RunOptions::threads(3)).unwrap();
        let b = run_coverage_with(&c, &RunOptions::threads(1)).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
    }

    #[test]
    fn driver_preconditions() {
        let multi =
            ScenarioConfig::multiple(OutcomeFamily::Linear, 100, vec![0.0; 2], vec![0.0; 2]);
        assert!(run_size_power(&multi).is_err());
        let single = ScenarioConfig::single(OutcomeFamily::Linear, 100, 0.0, 0.0);
        assert!(run_fwer(&single).is_err());
        assert!(run_size_power_with(&single.with_reps(3), &RunOptions::threads(0)).is_err());
    }

    #[test]
    fn all_null_fwer_is_controlled() {
        let c = ScenarioConfig::multiple(OutcomeFamily::Linear, 300, vec![0.0; 5], vec![0.0; 5])
            .with_reps(2000)
            .with_seed(3);
        let s = run_fwer(&c).unwrap();
        let ajs = s.error_rates(Method::Ajs).unwrap();
        assert!(ajs.power.is_none());
        assert!(
            ajs.fwer <= 0.05 + 3.0 * (0.05f64 * 0.95 / 2000.0).sqrt(),
            "{ajs:?}"
        );
    }

    #[test]
    fn cox_run_calibrates_and_records_c0() {
        let c = ScenarioConfig::single(OutcomeFamily::Cox, 200, 0.3, 0.3).with_reps(20);
        let s = run_size_power(&c).unwrap();
        assert!(s.scenario.c0.is_some());
        assert_eq!(s.reps_used + s.failures, 20);
    }
}
