//! Power of JS, AJS and ASobel as a function of the signal strength, with
//! `μ_α = μ_β = μ`.
//!
//! ```text
//! cargo run --release --example theoretical_power -- 0.5
//! ```

use medtest::dist::RngStream;
use medtest::testing::{theoretical_power_ajs, theoretical_power_asobel, theoretical_power_js};

fn main() -> medtest::Result<()> {
    let prob = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.5);
    let mut rng = RngStream::new(1, 0);
    println!("P(T_max >= lambda_n) = {prob}");
    println!(
        "{:>5} {:>8} {:>8} {:>8} {:>8}",
        "mu", "JS", "AJS", "ASobel", "MC se"
    );
    for i in 0..=10 {
        let mu = 0.5 * i as f64;
        let js = theoretical_power_js(mu, mu, 0.05)?;
        let ajs = theoretical_power_ajs(mu, mu, 0.05, prob)?;
        let asobel = theoretical_power_asobel(mu, mu, 0.05, prob, 100_000, &mut rng)?;
        println!(
            "{mu:>5.2} {js:>8.4} {ajs:>8.4} {:>8.4} {:>8.4}",
            asobel.estimate, asobel.standard_error
        );
    }
    Ok(())
}
