//! Sobel, joint significance (JS) and their adaptive variants for
//! `H₀: αβ = 0`, plus theoretical size and power calculators.
//!
//! The adaptive tests switch on `T_max = max(|T_α|, |T_β|)` against
//! `λ_n = √n / ln n`. Below the threshold the data look like `H00`, where
//! `P_JS` behaves like the maximum of two uniforms and `T_Sobel` is
//! asymptotically `N(0, 1/4)`, so `P_AJS = P_JS²` and the ASobel p-value
//! uses the `N(0, 1/4)` reference.

use serde::Serialize;

use crate::dist::{phi, two_sided_critical, two_sided_p, upper_tail, RngStream};
use crate::error::{Error, Result};
use crate::models::MediationFit;

/// All four p-values for one mediator together with the branch decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub mediator_index: usize,
    pub t_alpha: f64,
    pub t_beta: f64,
    pub t_sobel: f64,
    pub t_max: f64,
    pub lambda_n: f64,
    /// `true` iff `t_max < lambda_n`.
    pub adaptive_branch: bool,
    pub p_sobel: f64,
    pub p_js: f64,
    pub p_asobel: f64,
    pub p_ajs: f64,
}

impl TestReport {
    pub fn p_value(&self, method: Method) -> f64 {
        match method {
            Method::Sobel => self.p_sobel,
            Method::Js => self.p_js,
            Method::ASobel => self.p_asobel,
            Method::Ajs => self.p_ajs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    Sobel,
    Js,
    ASobel,
    Ajs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Sobel, Method::Js, Method::ASobel, Method::Ajs];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sobel => "Sobel",
            Method::Js => "JS",
            Method::ASobel => "ASobel",
            Method::Ajs => "AJS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `λ_n = √n / ln n`.
pub fn lambda_threshold(n: f64) -> Result<f64> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(Error::domain(format!("threshold needs n >= 2, got {n}")));
    }
    Ok(n.sqrt() / n.ln())
}

fn check_se(fit: &MediationFit) -> Result<()> {
    if !(fit.se_alpha > 0.0 && fit.se_beta > 0.0)
        || !fit.se_alpha.is_finite()
        || !fit.se_beta.is_finite()
    {
        return Err(Error::Degenerate(format!(
            "mediator {}: standard errors must be positive and finite",
            fit.mediator_index
        )));
    }
    Ok(())
}

pub fn t_max(fit: &MediationFit) -> f64 {
    fit.t_alpha().abs().max(fit.t_beta().abs())
}

/// Whether the adaptive (`H00`-like) branch applies: `T_max < λ_n`.
pub fn adaptive_branch(fit: &MediationFit) -> Result<bool> {
    check_se(fit)?;
    Ok(t_max(fit) < lambda_threshold(fit.n as f64)?)
}

/// `P_JS = max(P_α, P_β)` with two-sided normal component p-values.
pub fn p_js(fit: &MediationFit) -> Result<f64> {
    check_se(fit)?;
    Ok(two_sided_p(fit.t_alpha()).max(two_sided_p(fit.t_beta())))
}

/// `P_AJS`: `P_JS` when `T_max ≥ λ_n`, `P_JS²` otherwise. Returns the
/// p-value and the branch flag.
pub fn p_ajs(fit: &MediationFit) -> Result<(f64, bool)> {
    let p = p_js(fit)?;
    let branch = adaptive_branch(fit)?;
    Ok((if branch { p * p } else { p }, branch))
}

/// `T_Sobel = α̂β̂ / √(α̂²σ̂_β² + β̂²σ̂_α²)`, defined as 0 when `α̂β̂ = 0`
/// and the denominator vanishes.
pub fn sobel_stat(fit: &MediationFit) -> Result<f64> {
    if fit.se_alpha == 0.0 && fit.se_beta == 0.0 {
        return Err(Error::Degenerate("both standard errors are zero".into()));
    }
    let product = fit.product();
    let se = sobel_se(fit);
    if se == 0.0 {
        return if product == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Degenerate("Sobel standard error is zero".into()))
        };
    }
    Ok(product / se)
}

/// Delta-method standard error `σ̂_αβ` of `α̂β̂`.
pub fn sobel_se(fit: &MediationFit) -> f64 {
    (fit.alpha_hat * fit.se_beta).hypot(fit.beta_hat * fit.se_alpha)
}

pub fn p_sobel(fit: &MediationFit) -> Result<f64> {
    Ok(two_sided_p(sobel_stat(fit)?))
}

/// ASobel p-value: the Sobel p-value when `T_max ≥ λ_n`, otherwise the
/// two-sided tail of `N(0, 1/4)`, i.e. `2{1 − Φ(2|T_Sobel|)}`.
pub fn p_asobel(fit: &MediationFit) -> Result<f64> {
    let t = sobel_stat(fit)?;
    Ok(if adaptive_branch(fit)? {
        two_sided_p(2.0 * t)
    } else {
        two_sided_p(t)
    })
}

pub fn test_mediator(fit: &MediationFit) -> Result<TestReport> {
    check_se(fit)?;
    let lambda_n = lambda_threshold(fit.n as f64)?;
    let t_alpha = fit.t_alpha();
    let t_beta = fit.t_beta();
    let t_sobel = sobel_stat(fit)?;
    let t_max = t_alpha.abs().max(t_beta.abs());
    let adaptive_branch = t_max < lambda_n;
    let p_js = two_sided_p(t_alpha).max(two_sided_p(t_beta));
    let p_sobel = two_sided_p(t_sobel);
    let (p_ajs, p_asobel) = if adaptive_branch {
        (p_js * p_js, two_sided_p(2.0 * t_sobel))
    } else {
        (p_js, p_sobel)
    };
    Ok(TestReport {
        mediator_index: fit.mediator_index,
        t_alpha,
        t_beta,
        t_sobel,
        t_max,
        lambda_n,
        adaptive_branch,
        p_sobel,
        p_js,
        p_asobel,
        p_ajs,
    })
}

/// Asymptotic size of the Sobel test under `H00`: `2{1 − Φ(2 z_{1−δ/2})}`.
pub fn theoretical_size_sobel_h00(delta: f64) -> Result<f64> {
    let z = two_sided_critical(delta)?;
    Ok(2.0 * upper_tail(2.0 * z))
}

fn rejection_factor(mu: f64, z: f64) -> f64 {
    phi(mu - z) + phi(-mu - z)
}

/// JS power `[Φ(μ_α − z) + Φ(−μ_α − z)]·[Φ(μ_β − z) + Φ(−μ_β − z)]` with
/// `z = z_{1−δ/2}`.
pub fn theoretical_power_js(mu_alpha: f64, mu_beta: f64, delta: f64) -> Result<f64> {
    let z = two_sided_critical(delta)?;
    Ok(rejection_factor(mu_alpha, z) * rejection_factor(mu_beta, z))
}

fn check_probability(prob_tmax_ge: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&prob_tmax_ge) {
        return Err(Error::domain(format!(
            "P(T_max >= lambda_n) must lie in [0, 1], got {prob_tmax_ge}"
        )));
    }
    Ok(())
}

/// AJS power as the mixture over the two branches, where `prob_tmax_ge`
/// is `P(T_max ≥ λ_n)`. The `T_max < λ_n` branch rejects when both
/// component p-values fall below `√δ`.
pub fn theoretical_power_ajs(
    mu_alpha: f64,
    mu_beta: f64,
    delta: f64,
    prob_tmax_ge: f64,
) -> Result<f64> {
    check_probability(prob_tmax_ge)?;
    let upper = theoretical_power_js(mu_alpha, mu_beta, delta)?;
    let z_root = two_sided_critical(delta.sqrt())?;
    let lower = rejection_factor(mu_alpha, z_root) * rejection_factor(mu_beta, z_root);
    Ok(prob_tmax_ge * upper + (1.0 - prob_tmax_ge) * lower)
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub draws: usize,
}

pub const MIN_POWER_DRAWS: usize = 10_000;

/// ASobel power by Monte Carlo integration over `(x, y) ~ N(μ_α, 1) ×
/// N(μ_β, 1)`.
///
/// A draw rejects in the first branch when `|xy|/√(x² + y²) > z_{1−δ/2}`
/// and in the adaptive branch when it exceeds `z_{1−δ/2}/2`. Both branches
/// share the draws and are mixed with weight `prob_tmax_ge`.
pub fn theoretical_power_asobel(
    mu_alpha: f64,
    mu_beta: f64,
    delta: f64,
    prob_tmax_ge: f64,
    draws: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    check_probability(prob_tmax_ge)?;
    if draws < MIN_POWER_DRAWS {
        return Err(Error::domain(format!(
            "ASobel power needs at least {MIN_POWER_DRAWS} draws, got {draws}"
        )));
    }
    let z = two_sided_critical(delta)?;
    let (mut hits_full, mut hits_half) = (0usize, 0usize);
    for _ in 0..draws {
        let x = mu_alpha + rng.next_std_normal();
        let y = mu_beta + rng.next_std_normal();
        let r = x.hypot(y);
        let t = if r > 0.0 { (x * y).abs() / r } else { 0.0 };
        hits_full += usize::from(t > z);
        hits_half += usize::from(t > 0.5 * z);
    }
    let m = draws as f64;
    let estimate =
        prob_tmax_ge * hits_full as f64 / m + (1.0 - prob_tmax_ge) * hits_half as f64 / m;
    Ok(McEstimate {
        estimate,
        standard_error: (estimate * (1.0 - estimate) / m).sqrt(),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(alpha: f64, se_a: f64, beta: f64, se_b: f64, n: usize) -> MediationFit {
        MediationFit::new(alpha, se_a, beta, se_b, n, 0).unwrap()
    }

    // mpmath, 30 digits
    const P_HALF: f64 = 0.617_075_077_451_974;
    const P_ONE: f64 = 0.317_310_507_862_914;
    const P_FOUR: f64 = 6.334_248_366_623_98e-5;

    #[test]
    fn lambda_values() {
        let e2 = std::f64::consts::E.powi(2);
        assert!((lambda_threshold(e2).unwrap() - std::f64::consts::E / 2.0).abs() < 1e-12);
        assert!((lambda_threshold(1000.0).unwrap() - 4.577_865_793_523_51).abs() < 1e-12);
        assert!((lambda_threshold(500.0).unwrap() - 3.598_083_647_571_43).abs() < 1e-12);
        assert!(lambda_threshold(1.0).is_err());
    }

    #[test]
    fn js_values() {
        assert_eq!(p_js(&fit(0.0, 1.0, 0.0, 1.0, 100)).unwrap(), 1.0);
        let p = p_js(&fit(1.0, 1.0, 0.5, 1.0, 100)).unwrap();
        assert!((p - P_HALF).abs() < 1e-13);
        assert!((two_sided_p(1.0) - P_ONE).abs() < 1e-13);
        let p = p_js(&fit(1e9, 1.0, 0.5, 1.0, 100)).unwrap();
        assert!((p - P_HALF).abs() < 1e-13);
    }

    #[test]
    fn ajs_branches() {
        let (p, branch) = p_ajs(&fit(1.0, 1.0, 0.5, 1.0, 10_000)).unwrap();
        assert!(branch);
        assert!((p - P_HALF * P_HALF).abs() < 1e-13);
        assert!((p - 0.380_782).abs() < 1e-6);

        let (p, branch) = p_ajs(&fit(5.0, 1.0, 4.0, 1.0, 500)).unwrap();
        assert!(!branch);
        assert!((p / P_FOUR - 1.0).abs() < 1e-10);

        assert_eq!(p_ajs(&fit(0.0, 1.0, 0.0, 2.0, 50)).unwrap().0, 1.0);
    }

    #[test]
    fn tie_counts_as_not_adaptive() {
        let n = 1000usize;
        let lambda = lambda_threshold(n as f64).unwrap();
        let f = fit(lambda, 1.0, 0.1, 1.0, n);
        assert_eq!(t_max(&f), lambda);
        assert!(!adaptive_branch(&f).unwrap());
    }

    #[test]
    fn sobel_values() {
        let f = fit(0.5, 0.1, 0.3, 0.1, 500);
        let t = sobel_stat(&f).unwrap();
        assert!((t - 2.572_478_777_137_63).abs() < 1e-12);
        assert_eq!(sobel_stat(&fit(0.0, 0.1, 0.3, 0.1, 500)).unwrap(), 0.0);
        let flipped = sobel_stat(&fit(-0.5, 0.1, 0.3, 0.1, 500)).unwrap();
        assert_eq!(flipped, -t);
    }

    #[test]
    fn sobel_degenerate() {
        let raw = MediationFit {
            alpha_hat: 0.2,
            se_alpha: 0.0,
            beta_hat: 0.1,
            se_beta: 0.0,
            n: 10,
            mediator_index: 0,
        };
        assert!(sobel_stat(&raw).is_err());
        assert!(test_mediator(&raw).is_err());
    }

    #[test]
    fn asobel_values() {
        assert_eq!(p_asobel(&fit(0.0, 0.1, 0.0, 0.1, 500)).unwrap(), 1.0);
        // T_α = T_β = t·√2 gives T_Sobel = t; keep T_max below λ_500.
        let t = 0.979_981_992_270_027;
        let s = (2.0f64).sqrt() * t;
        let f = fit(s, 1.0, s, 1.0, 500);
        assert!((sobel_stat(&f).unwrap() - t).abs() < 1e-14);
        assert!((p_asobel(&f).unwrap() - 0.05).abs() < 1e-12);
        let strong = fit(6.0, 1.0, 2.0, 1.0, 500);
        assert_eq!(p_asobel(&strong).unwrap(), p_sobel(&strong).unwrap());
    }

    #[test]
    fn report_matches_individual_functions() {
        let f = fit(0.12, 0.04, 0.2, 0.07, 500);
        let r = test_mediator(&f).unwrap();
        assert_eq!(r.p_js, p_js(&f).unwrap());
        assert_eq!(r.p_ajs, p_ajs(&f).unwrap().0);
        assert_eq!(r.p_sobel, p_sobel(&f).unwrap());
        assert_eq!(r.p_asobel, p_asobel(&f).unwrap());
        assert_eq!(r.adaptive_branch, r.t_max < r.lambda_n);
    }

    #[test]
    fn dominance_on_random_fits() {
        let mut rng = RngStream::new(17, 0);
        for _ in 0..100_000 {
            let n = 3 + (rng.next_open01() * 5000.0) as usize;
            let a = 3.0 * rng.next_std_normal();
            let b = 3.0 * rng.next_std_normal();
            let sa = 0.05 + rng.next_open01();
            let sb = 0.05 + rng.next_open01();
            let f = fit(a, sa, b, sb, n);
            let r = test_mediator(&f).unwrap();
            assert!(r.p_ajs <= r.p_js);
            assert!(r.p_asobel <= r.p_sobel);
            for p in [r.p_ajs, r.p_js, r.p_asobel, r.p_sobel] {
                assert!((0.0..=1.0).contains(&p));
            }
            let bound = r.t_alpha.powi(2).min(r.t_beta.powi(2));
            assert!(r.t_sobel.powi(2) <= bound * (1.0 + 1e-10));
        }
    }

    #[test]
    fn sobel_size_closed_form() {
        let size = theoretical_size_sobel_h00(0.05).unwrap();
        assert!((size - 8.857_543_832_140_42e-5).abs() < 1e-12);
        assert!(size < 0.05);
        assert!((theoretical_size_sobel_h00(1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(theoretical_size_sobel_h00(0.0).is_err());
    }

    #[test]
    fn js_power_values() {
        assert!((theoretical_power_js(0.0, 0.0, 0.05).unwrap() - 0.0025).abs() < 1e-15);
        assert!((theoretical_power_js(40.0, 0.0, 0.05).unwrap() - 0.05).abs() < 1e-15);
        assert!(
            (theoretical_power_js(3.0, 3.0, 0.05).unwrap() - 0.723_926_609_688_302).abs() < 1e-12
        );
    }

    #[test]
    fn ajs_power_values() {
        for (a, b) in [(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)] {
            assert_eq!(
                theoretical_power_ajs(a, b, 0.05, 1.0).unwrap(),
                theoretical_power_js(a, b, 0.05).unwrap()
            );
        }
        assert!((theoretical_power_ajs(0.0, 0.0, 0.05, 0.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(theoretical_power_ajs(1.0, 1.0, 0.05, 1.5).is_err());
        assert!(theoretical_power_ajs(1.0, 1.0, 0.05, -0.1).is_err());
    }

    #[test]
    fn asobel_power_under_h00() {
        let mut rng = RngStream::new(5, 0);
        let est = theoretical_power_asobel(0.0, 0.0, 0.05, 0.0, 200_000, &mut rng).unwrap();
        assert!(
            (est.estimate - 0.05).abs() < 3.0 * est.standard_error,
            "{est:?}"
        );
        let est = theoretical_power_asobel(0.0, 0.0, 0.05, 1.0, 1_000_000, &mut rng).unwrap();
        let target = theoretical_size_sobel_h00(0.05).unwrap();
        assert!(
            (est.estimate - target).abs() < 4.0 * (target / 1e6).sqrt() + 1e-6,
            "{est:?}"
        );
        assert!(theoretical_power_asobel(0.0, 0.0, 0.05, 0.0, 100, &mut rng).is_err());
    }

    #[test]
    fn asobel_power_self_consistent() {
        let small =
            theoretical_power_asobel(5.0, 5.0, 0.05, 1.0, 100_000, &mut RngStream::new(1, 0))
                .unwrap();
        let large =
            theoretical_power_asobel(5.0, 5.0, 0.05, 1.0, 4_000_000, &mut RngStream::new(2, 0))
                .unwrap();
        assert!((small.estimate - large.estimate).abs() < 3.0 * small.standard_error);
    }
}
