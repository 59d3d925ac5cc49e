use nalgebra::DMatrix;

use super::config::ScenarioConfig;
use crate::dist::{exponential_from_unit, sample_mvn_into, CovMatrix, RngStream};
use crate::error::{Error, Result};
use crate::models::{Dataset, Outcome, OutcomeFamily};

/// Stream reserved for the censoring pilot; replications use `0..reps`.
pub const PILOT_STREAM: u64 = u64::MAX;

pub const MIN_PILOT_N: usize = 100_000;

/// A validated scenario with its covariance factor, ready to draw
/// replications.
#[derive(Clone, Debug)]
pub struct Generator {
    config: ScenarioConfig,
    chol: DMatrix<f64>,
    mean: Vec<f64>,
}

impl Generator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        if config.family == OutcomeFamily::Cox && config.c0.is_none() {
            return Err(Error::Calibration(
                "cox scenario has no censoring bound c0; calibrate first".into(),
            ));
        }
        Self::unchecked(config)
    }

    fn unchecked(config: &ScenarioConfig) -> Result<Self> {
        let d = config.d();
        let chol = CovMatrix::ar1(d, config.rho)?.cholesky()?;
        Ok(Self {
            config: config.clone(),
            chol,
            mean: vec![config.mediator_intercept(); d],
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Draws `(x, m, η)` for one subject, `η = γX + βᵀM`.
    fn subject(&self, rng: &mut RngStream, m: &mut [f64], e: &mut [f64]) -> (f64, f64) {
        let x = rng.next_std_normal();
        sample_mvn_into(&self.mean, &self.chol, rng, e);
        let mut eta = self.config.gamma * x;
        for k in 0..m.len() {
            m[k] = e[k] + self.config.alpha[k] * x;
            eta += self.config.beta[k] * m[k];
        }
        (x, eta)
    }

    /// The dataset for replication `rep`; a pure function of
    /// `(base_seed, rep)`.
    pub fn dataset(&self, rep: u64) -> Result<Dataset> {
        let c = &self.config;
        let (n, d) = (c.n, c.d());
        let mut rng = RngStream::new(c.base_seed, rep);
        let mut exposure = Vec::with_capacity(n);
        let mut mediators = DMatrix::zeros(n, d);
        let mut m = vec![0.0; d];
        let mut e = vec![0.0; d];
        let mut y = Vec::with_capacity(n);
        let mut event = Vec::new();
        let c0 = c.c0.unwrap_or(f64::NAN);
        for i in 0..n {
            let (x, eta) = self.subject(&mut rng, &mut m, &mut e);
            exposure.push(x);
            for k in 0..d {
                mediators[(i, k)] = m[k];
            }
            match c.family {
                OutcomeFamily::Linear => y.push(c.outcome_intercept + eta + rng.next_std_normal()),
                OutcomeFamily::Logistic => {
                    let p = 1.0 / (1.0 + (-eta).exp());
                    y.push(if rng.next_open01() < p { 1.0 } else { 0.0 });
                }
                OutcomeFamily::Cox => {
                    let t = exponential_from_unit(eta.exp(), rng.next_open01())?;
                    let censor = c0 * rng.next_open01();
                    if t <= censor {
                        y.push(t);
                        event.push(1.0);
                    } else {
                        y.push(censor);
                        event.push(0.0);
                    }
                }
            }
        }
        let outcome = match c.family {
            OutcomeFamily::Linear => Outcome::Continuous(y),
            OutcomeFamily::Logistic => Outcome::Binary(y),
            OutcomeFamily::Cox => Outcome::Survival { time: y, event },
        };
        Dataset::new(exposure, mediators, DMatrix::zeros(n, 0), outcome)
    }
}

/// Draws one replication of `config`.
pub fn generate(config: &ScenarioConfig, rep: u64) -> Result<Dataset> {
    Generator::new(config)?.dataset(rep)
}

/// Expected censoring share `P(C < T)` given event rates `r_i` and
/// `C ~ U(0, c₀)`: the mean of `(1 − e^{−r c₀}) / (r c₀)`.
fn censoring_rate(rates: &[f64], c0: f64) -> f64 {
    let total: f64 = rates
        .iter()
        .map(|r| {
            let s = r * c0;
            if s < 1e-12 {
                1.0
            } else {
                -(-s).exp_m1() / s
            }
        })
        .sum();
    total / rates.len() as f64
}

/// Chooses `c₀` so that the censoring share hits `censor_target`.
///
/// A pilot of `pilot_n` subjects is drawn from the reserved stream; for
/// each, the censoring probability given its linear predictor is exact, so
/// the pilot estimate is smooth and strictly decreasing in `c₀` and
/// bisection over `(10⁻³, 10³)` converges to machine precision.
pub fn calibrate_censoring(config: &ScenarioConfig, pilot_n: usize) -> Result<f64> {
    if config.family != OutcomeFamily::Cox {
        return Err(Error::config(
            "family",
            "censoring calibration applies to cox scenarios only",
        ));
    }
    if pilot_n < MIN_PILOT_N {
        return Err(Error::config(
            "pilot_n",
            format!("pilot needs at least {MIN_PILOT_N} subjects, got {pilot_n}"),
        ));
    }
    config.validate()?;
    let generator = Generator::unchecked(config)?;
    let d = config.d();
    let mut rng = RngStream::new(config.base_seed, PILOT_STREAM);
    let (mut m, mut e) = (vec![0.0; d], vec![0.0; d]);
    let rates: Vec<f64> = (0..pilot_n)
        .map(|_| generator.subject(&mut rng, &mut m, &mut e).1.exp())
        .collect();
    let target = config.censor_target;
    let (mut lo, mut hi) = (1e-3, 1e3);
    let (at_lo, at_hi) = (censoring_rate(&rates, lo), censoring_rate(&rates, hi));
    if !(target < at_lo && target > at_hi) {
        return Err(Error::Calibration(format!(
            "target {target} outside attainable range ({at_hi:.4}, {at_lo:.4})"
        )));
    }
    // Geometric bisection; the bracket spans six decades.
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if censoring_rate(&rates, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Returns `config` with `c0` filled in for cox scenarios lacking one.
pub fn calibrated(config: &ScenarioConfig) -> Result<ScenarioConfig> {
    let mut out = config.clone();
    if out.family == OutcomeFamily::Cox && out.c0.is_none() {
        out.c0 = Some(calibrate_censoring(config, MIN_PILOT_N)?);
    }
    Ok(out)
}
