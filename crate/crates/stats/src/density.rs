//! Gaussian kernel density estimates and their aggregation across universes.

use serde::Serialize;
use statrs::function::erf::erf;

use crate::StatsError;

pub const DEFAULT_GRID_SIZE: usize = 256;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR/1.34) * n^(-1/5)`.
///
/// When one spread measure is zero the other is used alone; when both are
/// zero (a single or constant sample) the spread falls back to 1% of the
/// magnitude of the data, or 0.01 around zero.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    assert!(!x.is_empty(), "bandwidth of an empty sample");
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(x);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.01 * mean(x).abs().max(1.0),
    };
    0.9 * spread * (x.len() as f64).powf(-0.2)
}

/// A univariate Gaussian KDE.
#[derive(Debug, Clone)]
pub struct Kde {
    data: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(data: &[f64]) -> Self {
        Kde {
            bandwidth: silverman_bandwidth(data),
            data: data.to_vec(),
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.data
            .iter()
            .map(|xi| {
                let z = (x - xi) / h;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * INV_SQRT_2PI
            / (h * self.data.len() as f64)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.bandwidth * std::f64::consts::SQRT_2;
        self.data
            .iter()
            .map(|xi| 0.5 * (1.0 + erf((x - xi) / s)))
            .sum::<f64>()
            / self.data.len() as f64
    }
}

/// Density values over a grid, plus the factor that rescales their area to
/// one unit per universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub scale_factor: f64,
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// Evenly spaced grid over all samples, padded by three of the largest
/// per-sample bandwidths on each side.
pub fn density_grid(samples: &[Vec<f64>], grid_size: usize) -> Result<Vec<f64>, StatsError> {
    let non_empty: Vec<&Vec<f64>> = samples.iter().filter(|s| !s.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(StatsError::NoDraws);
    }
    if grid_size < 2 {
        return Err(StatsError::InvalidInput("grid needs at least two points".into()));
    }
    let all = non_empty.iter().flat_map(|s| s.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let hmax = non_empty
        .iter()
        .map(|s| silverman_bandwidth(s))
        .fold(0.0, f64::max);
    let (a, b) = (lo - 3.0 * hmax, hi + 3.0 * hmax);
    let step = (b - a) / (grid_size - 1) as f64;
    Ok((0..grid_size).map(|i| a + step * i as f64).collect())
}

pub fn pdf_curve(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let k = Kde::new(samples);
    grid.iter().map(|&x| k.pdf(x)).collect()
}

pub fn cdf_curve(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let k = Kde::new(samples);
    grid.iter().map(|&x| k.cdf(x)).collect()
}

/// `Σ_i f_i` over the universes that have samples, with a scale factor so that
/// `values * scale_factor` has total area equal to the universe count.
pub fn aggregate_density(samples: &[Vec<f64>], grid_size: usize) -> Result<DensityCurve, StatsError> {
    let grid = density_grid(samples, grid_size)?;
    Ok(aggregate_density_on(samples, None, grid))
}

/// `Σ_i w_i f_i`, e.g. with stacking weights.
pub fn aggregate_density_weighted(
    samples: &[Vec<f64>],
    weights: &[f64],
    grid_size: usize,
) -> Result<DensityCurve, StatsError> {
    if weights.len() != samples.len() {
        return Err(StatsError::InvalidInput(format!(
            "{} weights for {} universes",
            weights.len(),
            samples.len()
        )));
    }
    let grid = density_grid(samples, grid_size)?;
    Ok(aggregate_density_on(samples, Some(weights), grid))
}

/// Aggregate on a caller-supplied grid; universes without samples are skipped.
pub fn aggregate_density_on(samples: &[Vec<f64>], weights: Option<&[f64]>, grid: Vec<f64>) -> DensityCurve {
    let mut values = vec![0.0; grid.len()];
    let mut count = 0usize;
    for (i, s) in samples.iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        count += 1;
        let w = weights.map_or(1.0, |w| w[i]);
        for (v, f) in values.iter_mut().zip(pdf_curve(s, &grid)) {
            *v += w * f;
        }
    }
    let area = trapezoid(&grid, &values);
    DensityCurve {
        scale_factor: if area > 0.0 { count as f64 / area } else { 0.0 },
        grid,
        values,
    }
}

/// Density of a set of point estimates (one per universe) when no draws are
/// available: one Silverman-bandwidth kernel per estimate, optionally weighted.
/// Unweighted values have area equal to the number of estimates, matching
/// [`aggregate_density`].
pub fn point_density(
    points: &[f64],
    weights: Option<&[f64]>,
    grid_size: usize,
) -> Result<DensityCurve, StatsError> {
    let grid = density_grid(&[points.to_vec()], grid_size)?;
    point_density_on(points, weights, grid)
}

pub fn point_density_on(
    points: &[f64],
    weights: Option<&[f64]>,
    grid: Vec<f64>,
) -> Result<DensityCurve, StatsError> {
    if points.is_empty() {
        return Err(StatsError::NoDraws);
    }
    if weights.is_some_and(|w| w.len() != points.len()) {
        return Err(StatsError::InvalidInput("one weight per estimate is required".into()));
    }
    let h = silverman_bandwidth(points);
    let values: Vec<f64> = grid
        .iter()
        .map(|&x| {
            points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let z = (x - p) / h;
                    weights.map_or(1.0, |w| w[i]) * (-0.5 * z * z).exp() * INV_SQRT_2PI / h
                })
                .sum()
        })
        .collect();
    let area = trapezoid(&grid, &values);
    Ok(DensityCurve {
        scale_factor: if area > 0.0 { points.len() as f64 / area } else { 0.0 },
        grid,
        values,
    })
}
