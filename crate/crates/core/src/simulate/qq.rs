use crate::error::{Error, Result};

fn sorted_checked(pvalues: &[f64]) -> Result<Vec<f64>> {
    if pvalues.is_empty() {
        return Err(Error::domain("no p-values given"));
    }
    if let Some(i) = pvalues.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Data {
            row: i,
            column: "p".into(),
            message: format!("p-value {} outside [0, 1]", pvalues[i]),
        });
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Pairs `((i − 0.5)/m, p_(i))` for a uniform Q-Q plot.
pub fn qq_data(pvalues: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sorted = sorted_checked(pvalues)?;
    let m = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, p)| ((i as f64 + 0.5) / m, p))
        .collect())
}

/// One-sample Kolmogorov–Smirnov distance from U(0, 1).
pub fn ks_uniform_distance(pvalues: &[f64]) -> Result<f64> {
    let sorted = sorted_checked(pvalues)?;
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, p)| ((i as f64 + 1.0) / m - p).max(p - i as f64 / m))
        .fold(0.0, f64::max))
}
