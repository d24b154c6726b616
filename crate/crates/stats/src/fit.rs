//! Model fit: cross-validated NRMSE and quantile sampling of predictions.

use crate::StatsError;

/// Normalized root mean squared error over cross-validation folds.
///
/// Each fold is a list of `(observed, predicted)` pairs; the MSE is the mean of
/// the per-fold MSEs and the span is taken over `observed`. A constant
/// observed variable has no span and gives `Ok(None)`.
pub fn nrmse(observed: &[f64], folds: &[Vec<(f64, f64)>]) -> Result<Option<f64>, StatsError> {
    if folds.is_empty() {
        return Err(StatsError::InvalidInput("NRMSE needs at least one fold".into()));
    }
    if let Some(i) = folds.iter().position(Vec::is_empty) {
        return Err(StatsError::InvalidInput(format!("fold {i} is empty")));
    }
    let (lo, hi) = observed
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let span = hi - lo;
    if !(span > 0.0) {
        return Ok(None);
    }
    let mse = folds
        .iter()
        .map(|f| f.iter().map(|(y, p)| (y - p).powi(2)).sum::<f64>() / f.len() as f64)
        .sum::<f64>()
        / folds.len() as f64;
    Ok(Some(mse.sqrt() / span))
}

/// Picks `min(k, n)` values at evenly spaced percentiles `(i - 0.5)/k` using
/// the nearest-rank definition. Output is sorted and drawn from the input.
pub fn quantile_sample(values: &[f64], k: usize) -> Vec<f64> {
    if values.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = k.min(n);
    (1..=k)
        .map(|i| {
            // rank = ceil((2i - 1) n / 2k), 1-based
            let rank = ((2 * i - 1) * n).div_ceil(2 * k).max(1);
            sorted[rank - 1]
        })
        .collect()
}
