//! Bonferroni testing over ten mediators, then FWER and power over
//! replications.
//!
//! ```text
//! cargo run --release --example multiple_mediators -- 1000
//! ```

use medtest::models::{fit_mediation, OutcomeFamily};
use medtest::multitest::test_all;
use medtest::simulate::{generate, run_fwer, ScenarioConfig};
use medtest::testing::Method;

fn main() -> medtest::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(500);
    let alpha = vec![0.15, 0.05, 0.15, 0.15, 0.05, 0.5, 0.5, 0.0, 0.0, 0.0];
    let beta = vec![0.15, 0.05, 0.15, 0.05, 0.1, 0.0, 0.0, 0.5, 0.5, 0.0];
    let config = ScenarioConfig::multiple(OutcomeFamily::Linear, 500, alpha, beta)
        .with_reps(reps)
        .with_seed(3);
    let truth: Vec<usize> = config.truth().iter().map(|k| k + 1).collect();
    println!("true mediators: {truth:?}");

    let fits = fit_mediation(&generate(&config, 0)?, OutcomeFamily::Linear)?;
    let result = test_all(&fits, config.delta)?;
    println!("one dataset, threshold {:.4}:", result.threshold);
    for m in Method::ALL {
        let found: Vec<usize> = result.rejected(m).iter().map(|k| k + 1).collect();
        println!("  {:<7} {found:?}", m.name());
    }

    let summary = run_fwer(&config)?;
    println!("{reps} replications:");
    for m in Method::ALL {
        let r = summary.error_rates(m).expect("fwer summary");
        println!(
            "  {:<7} FWER {:.4} (se {:.4})  power {:.4}",
            m.name(),
            r.fwer,
            r.fwer_se,
            r.power.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
