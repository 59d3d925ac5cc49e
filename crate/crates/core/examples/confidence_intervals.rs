//! Sobel and ASobel intervals for one dataset, then coverage and length
//! over replications.
//!
//! ```text
//! cargo run --release --example confidence_intervals -- 1000
//! ```

use medtest::intervals::ci_asobel;
use medtest::models::{fit_mediation, OutcomeFamily};
use medtest::simulate::{generate, run_coverage, ScenarioConfig};

fn main() -> medtest::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(500);
    let alpha = vec![0.0, 0.35, 0.5, 0.0, 0.0, 0.15, 0.25];
    let beta = vec![0.0, 0.0, 0.0, 0.35, 0.5, 0.3, 0.35];
    let config = ScenarioConfig::multiple(OutcomeFamily::Linear, 500, alpha, beta)
        .with_reps(reps)
        .with_seed(5);

    let fits = fit_mediation(&generate(&config, 0)?, OutcomeFamily::Linear)?;
    println!(
        "{:<3} {:>9} {:>24} {:>24}",
        "k", "estimate", "Sobel 95%", "ASobel 95%"
    );
    for fit in &fits {
        let ci = ci_asobel(fit, 0.05)?;
        println!(
            "{:<3} {:>9.5} {:>24} {:>24}",
            fit.mediator_index + 1,
            ci.point,
            format!("[{:.5}, {:.5}]", ci.sobel.lo, ci.sobel.hi),
            format!("[{:.5}, {:.5}]", ci.asobel.lo, ci.asobel.hi),
        );
    }

    let summary = run_coverage(&config)?;
    println!("\n{reps} replications:");
    println!(
        "{:<3} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}",
        "k", "alpha", "beta", "CP Sob", "CP ASob", "LCI Sob", "LCI ASob"
    );
    for r in summary.coverage() {
        println!(
            "{:<3} {:>6.2} {:>6.2} {:>9.4} {:>9.4} {:>9.5} {:>9.5}",
            r.mediator_index + 1,
            r.alpha,
            r.beta,
            r.sobel_cp,
            r.asobel_cp,
            r.sobel_lci,
            r.asobel_lci
        );
    }
    Ok(())
}
