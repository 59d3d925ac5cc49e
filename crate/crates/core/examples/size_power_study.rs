//! Empirical size and power for a bundled scenario file, reporting each
//! row next to the plug-in theoretical AJS power.
//!
//! ```text
//! cargo run --release --example size_power_study -- scenarios/table1.json 2000
//! ```

use medtest::cli::run_scenarios;
use medtest::simulate::{RunOptions, ScenarioBundle, StudyKind};
use medtest::testing::{theoretical_power_ajs, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "scenarios/table1.json".into());
    let reps: Option<usize> = args.next().and_then(|a| a.parse().ok()).or(Some(1000));
    let bundle = ScenarioBundle::from_json(&std::fs::read_to_string(&path)?)?;
    if bundle.kind != StudyKind::SizePower {
        return Err(format!("{path} is a {} bundle", bundle.kind).into());
    }
    let summaries = run_scenarios(
        &bundle.scenarios()?,
        bundle.kind,
        None,
        reps,
        &RunOptions::default(),
    )?;
    println!(
        "{:<9} {:>5} {:>5} {:>5} {:>7} {:>7} {:>7} {:>7} {:>9}",
        "family", "n", "alpha", "beta", "Sobel", "JS", "ASobel", "AJS", "AJS theo"
    );
    for s in &summaries {
        let c = &s.scenario;
        let p = &s.plug_in[0];
        let theory = theoretical_power_ajs(p.mu_alpha, p.mu_beta, c.delta, p.prob_tmax_ge)?;
        print!(
            "{:<9} {:>5} {:>5.2} {:>5.2}",
            c.family.to_string(),
            c.n,
            c.alpha[0],
            c.beta[0]
        );
        for m in Method::ALL {
            print!(" {:>7.4}", s.rate(m).unwrap_or(f64::NAN));
        }
        println!(" {theory:>9.4}");
    }
    Ok(())
}
