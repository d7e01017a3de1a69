use crate::error::{invalid, Error, Result};

/// Percentile rule used by [`nrmse_stable`], recorded in reports.
pub const PERCENTILE_RULE: &str = "linear interpolation between order statistics at rank (n-1)*p";

/// Percentile `p` in `[0, 1]` by linear interpolation at rank `(n-1) * p`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("percentile of an empty collection"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("percentile {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (sorted.len() - 1) as f64 * p;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// RMSE between `reference` and `candidate`, divided by the spread between
/// the 5th and 95th percentiles of `reference`.
pub fn nrmse_stable(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(Error::Shape(format!(
            "nrmse inputs differ in length: {} vs {}",
            reference.len(),
            candidate.len()
        )));
    }
    let range = percentile(reference, 0.95)? - percentile(reference, 0.05)?;
    if !(range > 0.0) {
        return Err(Error::Degenerate(
            "reference has zero 5th-95th percentile range".into(),
        ));
    }
    let mse = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| (r - c) * (r - c))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(mse.sqrt() / range)
}
