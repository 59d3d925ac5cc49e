//! Mediation with a censored survival outcome: calibrate the censoring
//! bound to 30%, fit the Cox outcome model and test each mediator.
//!
//! ```text
//! cargo run --release --example survival_mediation
//! ```

use medtest::models::{fit_mediation, Outcome, OutcomeFamily};
use medtest::multitest::test_all;
use medtest::simulate::{calibrated, generate, ScenarioConfig};
use medtest::testing::Method;

fn main() -> medtest::Result<()> {
    let alpha = vec![0.0, 0.35, 0.5, 0.0, 0.0, 0.25, 0.35];
    let beta = vec![0.0, 0.0, 0.0, 0.5, 0.45, 0.25, 0.35];
    let config =
        calibrated(&ScenarioConfig::multiple(OutcomeFamily::Cox, 1000, alpha, beta).with_seed(2))?;
    println!("calibrated c0 = {:.5}", config.c0.unwrap_or(f64::NAN));

    let data = generate(&config, 0)?;
    if let Outcome::Survival { event, .. } = &data.outcome {
        let censored = event.iter().filter(|e| **e == 0.0).count();
        println!("censored {censored} of {}", data.n());
    }
    let fits = fit_mediation(&data, OutcomeFamily::Cox)?;
    let result = test_all(&fits, 0.05)?;
    println!(
        "{:<3} {:>8} {:>8} {:>8} {:>8} {:>10}",
        "k", "alpha", "beta", "p JS", "p AJS", "AJS select"
    );
    for (fit, rep) in fits.iter().zip(&result.per_mediator) {
        println!(
            "{:<3} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10}",
            fit.mediator_index + 1,
            fit.alpha_hat,
            fit.beta_hat,
            rep.p_js,
            rep.p_ajs,
            result.rejected(Method::Ajs).contains(&fit.mediator_index)
        );
    }
    Ok(())
}
