//! Fit one exposure → mediator → outcome chain and compare the four tests.
//!
//! ```text
//! cargo run --release --example single_mediator -- 0.1 0.15 500
//! ```

use medtest::models::{fit_mediation, OutcomeFamily};
use medtest::simulate::{generate, ScenarioConfig};
use medtest::testing::test_mediator;

fn main() -> medtest::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let alpha = args.first().copied().unwrap_or(0.1);
    let beta = args.get(1).copied().unwrap_or(0.15);
    let n = args.get(2).map_or(500, |v| *v as usize);

    let config = ScenarioConfig::single(OutcomeFamily::Linear, n, alpha, beta).with_seed(7);
    let data = generate(&config, 0)?;
    let fit = fit_mediation(&data, OutcomeFamily::Linear)?[0];
    let report = test_mediator(&fit)?;

    println!("alpha_hat = {:.4} (se {:.4})", fit.alpha_hat, fit.se_alpha);
    println!("beta_hat  = {:.4} (se {:.4})", fit.beta_hat, fit.se_beta);
    println!(
        "T_max = {:.3}, lambda_n = {:.3}, adaptive branch: {}",
        report.t_max, report.lambda_n, report.adaptive_branch
    );
    println!("p Sobel  = {:.5}", report.p_sobel);
    println!("p JS     = {:.5}", report.p_js);
    println!("p ASobel = {:.5}", report.p_asobel);
    println!("p AJS    = {:.5}", report.p_ajs);
    Ok(())
}
