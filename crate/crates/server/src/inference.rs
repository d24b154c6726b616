//! The inference bundle: observed and null aggregates, null intervals and the
//! numbers behind the guidance captions.

use std::collections::BTreeMap;

use multiverse_stats::{
    aggregate_density_on, density_grid, null_intervals, point_density_on, prune, stacking_weights, DensityCurve,
    NullInterval, DEFAULT_GRID_SIZE,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Compare against estimates from permuted data.
    Null,
    /// Compare against a zero effect.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    None,
    Stacking,
    Prune,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceRequest {
    pub mode: Mode,
    #[serde(default)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniverseWeight {
    pub uid: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Guidance {
    pub observed_mean: f64,
    pub observed_sd: f64,
    /// Mean of the null aggregate, or 0 in simple mode.
    pub reference_mean: f64,
    /// Spread of the null aggregate; absent in simple mode.
    pub reference_sd: Option<f64>,
    pub mean_distance: f64,
    /// `mean_distance` over the reference spread (observed spread in simple mode).
    pub distance_over_spread: Option<f64>,
    pub outside_count: Option<usize>,
    pub universe_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceBundle {
    pub mode: Mode,
    pub weighting: Weighting,
    /// Universes that enter the aggregate.
    pub universes: Vec<usize>,
    /// Successful universes left out by the prune cutoff.
    pub excluded: Vec<usize>,
    /// `draws` when every included universe has draws, otherwise `estimates`.
    pub source: &'static str,
    pub observed: DensityCurve,
    pub null: Option<DensityCurve>,
    pub weights: Option<Vec<UniverseWeight>>,
    pub stacking_objective: Option<f64>,
    pub zero_line: Option<f64>,
    pub intervals: Vec<NullInterval>,
    pub outside_count: Option<usize>,
    pub missing_null: Vec<usize>,
    pub guidance: Guidance,
    pub warnings: Vec<String>,
}

/// Mean and standard deviation of a density curve, by the trapezoid rule.
fn moments(c: &DensityCurve) -> (f64, f64) {
    let integrate = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        c.grid
            .windows(2)
            .zip(c.values.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (f(x[0], y[0]) + f(x[1], y[1])) / 2.0)
            .sum()
    };
    let mass = integrate(&|_, y| y);
    if !(mass > 0.0) {
        return (f64::NAN, f64::NAN);
    }
    let mean = integrate(&|x, y| x * y) / mass;
    let var = integrate(&|x, y| (x - mean).powi(2) * y) / mass;
    (mean, var.max(0.0).sqrt())
}

pub fn build(a: &Artifacts, req: &InferenceRequest, cutoff: Option<f64>) -> Result<InferenceBundle, ApiError> {
    let estimates = a.estimates();
    if estimates.is_empty() {
        return Err(ApiError::unprocessable("no-estimates", "no universe produced an estimate"));
    }
    let mut warnings = a.warnings.clone();
    let mut uids: Vec<usize> = estimates.keys().copied().collect();
    let mut excluded = Vec::new();
    if req.weighting == Weighting::Prune {
        match cutoff {
            Some(c) => {
                let p = prune(&a.fits(), c)?;
                uids = p.kept;
                excluded = p.removed;
                if !p.unscored.is_empty() {
                    warnings.push(format!("{} universes have no fit metric and were kept", p.unscored.len()));
                }
            }
            None => warnings.push("no prune cutoff has been set; all universes are included".into()),
        }
    }

    let null_by_uid: Option<BTreeMap<usize, Vec<f64>>> = match req.mode {
        Mode::Simple => None,
        Mode::Null => {
            let Some(null) = &a.null else {
                return Err(ApiError::unprocessable(
                    "no-null",
                    "no permutation results; run `multiverse run --null N` first",
                ));
            };
            let mut m: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for &(_, uid, e) in null {
                m.entry(uid).or_default().push(e);
            }
            Some(m)
        }
    };

    let (weights, stacking_objective) = match req.weighting {
        Weighting::Stacking => {
            let missing: Vec<usize> = uids.iter().copied().filter(|u| !a.lpd.contains_key(u)).collect();
            if !missing.is_empty() {
                return Err(ApiError::unprocessable(
                    "no-lpd",
                    format!("stacking needs lpd_<uid>.csv for every universe; missing for {missing:?}"),
                ));
            }
            let n = a.lpd[&uids[0]].len();
            if let Some(u) = uids.iter().find(|u| a.lpd[u].len() != n) {
                return Err(ApiError::unprocessable(
                    "no-lpd",
                    format!("universe {u} has {} held-out points, universe {} has {n}", a.lpd[u].len(), uids[0]),
                ));
            }
            let matrix: Vec<Vec<f64>> = (0..n).map(|i| uids.iter().map(|u| a.lpd[u][i]).collect()).collect();
            let s = stacking_weights(&matrix)?;
            (Some(s.weights), Some(s.objective))
        }
        _ => (None, None),
    };

    let points: Vec<f64> = uids.iter().map(|u| estimates[u]).collect();
    let with_draws = uids.iter().filter(|u| a.draws.contains_key(u)).count();
    let use_draws = with_draws == uids.len();
    if with_draws > 0 && !use_draws {
        warnings.push(format!(
            "only {with_draws} of {} universes have draws; aggregating point estimates",
            uids.len()
        ));
    }
    let observed_sets: Vec<Vec<f64>> = if use_draws {
        uids.iter().map(|u| a.draws[u].clone()).collect()
    } else {
        vec![points.clone()]
    };
    let null_sets: Vec<Vec<f64>> = null_by_uid
        .as_ref()
        .map(|m| uids.iter().map(|u| m.get(u).cloned().unwrap_or_default()).collect())
        .unwrap_or_default();
    let grid_sets: Vec<Vec<f64>> = observed_sets.iter().chain(&null_sets).cloned().collect();
    let grid = density_grid(&grid_sets, DEFAULT_GRID_SIZE)?;
    let w = weights.as_deref();
    let observed = if use_draws {
        aggregate_density_on(&observed_sets, w, grid.clone())
    } else {
        point_density_on(&points, w, grid.clone())?
    };

    let mut intervals = Vec::new();
    let mut missing_null = Vec::new();
    let mut outside_count = None;
    let mut null = None;
    if let Some(m) = &null_by_uid {
        if null_sets.iter().all(Vec::is_empty) {
            return Err(ApiError::unprocessable("no-null", "no permutation estimates for the included universes"));
        }
        null = Some(aggregate_density_on(&null_sets, w, grid));
        let pairs: Vec<(usize, f64)> = uids
            .iter()
            .flat_map(|u| m.get(u).into_iter().flatten().map(move |&e| (*u, e)))
            .collect();
        let observed_map: BTreeMap<usize, f64> = uids.iter().map(|u| (*u, estimates[u])).collect();
        let report = null_intervals(&pairs, &observed_map);
        intervals = report.intervals;
        missing_null = report.missing;
        outside_count = Some(report.outside_count);
        warnings.extend(report.warnings);
    }

    let (observed_mean, observed_sd) = moments(&observed);
    let (reference_mean, reference_sd) = match &null {
        Some(c) => {
            let (m, s) = moments(c);
            (m, Some(s))
        }
        None => (0.0, None),
    };
    let mean_distance = (observed_mean - reference_mean).abs();
    let spread = reference_sd.unwrap_or(observed_sd);
    let guidance = Guidance {
        observed_mean,
        observed_sd,
        reference_mean,
        reference_sd,
        mean_distance,
        distance_over_spread: (spread > 0.0).then(|| mean_distance / spread),
        outside_count,
        universe_count: uids.len(),
    };

    Ok(InferenceBundle {
        mode: req.mode,
        weighting: req.weighting,
        weights: weights.map(|w| {
            uids.iter()
                .zip(w)
                .map(|(&uid, weight)| UniverseWeight { uid, weight })
                .collect()
        }),
        universes: uids,
        excluded,
        source: if use_draws { "draws" } else { "estimates" },
        observed,
        null,
        stacking_objective,
        zero_line: (req.mode == Mode::Simple).then_some(0.0),
        intervals,
        outside_count,
        missing_null,
        guidance,
        warnings,
    })
}
