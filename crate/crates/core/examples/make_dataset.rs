//! Writes the bundled example dataset: seven mediators, a censored
//! survival outcome, two noise covariates and a few missing cells.
//!
//! ```text
//! cargo run --release --example make_dataset -- data/survival_mediators.csv
//! ```

use medtest::cli::{fmt_full, DatasetColumns};
use medtest::dist::RngStream;
use medtest::models::{Outcome, OutcomeFamily};
use medtest::simulate::{calibrated, generate, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/survival_mediators.csv".into());
    let alpha = vec![0.0, 0.35, 0.5, 0.0, 0.0, 0.25, 0.35];
    let beta = vec![0.0, 0.0, 0.0, 0.5, 0.45, 0.25, 0.35];
    let config = calibrated(
        &ScenarioConfig::multiple(OutcomeFamily::Cox, 600, alpha, beta).with_seed(2024),
    )?;
    let data = generate(&config, 0)?;
    let Outcome::Survival { time, event } = &data.outcome else {
        unreachable!()
    };

    let mut cols = DatasetColumns::default_for(&data);
    cols.covariates = vec!["age".into(), "sex".into()];
    let mut rng = RngStream::new(2024, 1);
    let mut w = csv::Writer::from_path(&out)?;
    let mut header = vec![cols.exposure.clone()];
    header.extend(cols.mediators.iter().cloned());
    header.extend(cols.covariates.iter().cloned());
    header.extend(cols.outcome.iter().cloned());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![fmt_full(data.exposure[i])];
        rec.extend(data.mediators.row(i).iter().map(|v| fmt_full(*v)));
        let age = 50.0 + 10.0 * rng.next_std_normal();
        let sex = if rng.next_open01() < 0.5 { "0" } else { "1" };
        rec.push(format!("{age:.1}"));
        rec.push(sex.into());
        rec.push(fmt_full(time[i]));
        rec.push(format!("{}", event[i] as i64));
        // Every 97th subject is missing one mediator value.
        if i % 97 == 13 {
            rec[1 + i % 7] = "NA".into();
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!(
        "wrote {} rows to {out} (c0 = {:.4})",
        data.n(),
        config.c0.unwrap_or(f64::NAN)
    );
    Ok(())
}
