//! Per-universe null intervals from permutation runs.

use std::collections::BTreeMap;

use serde::Serialize;

/// Below this many null estimates the 2.5/97.5 percentiles are coarse.
pub const MIN_NULL_ESTIMATES: usize = 20;

/// Linear-interpolation percentile (`p` in [0, 1]) of a sorted sample.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullInterval {
    pub uid: usize,
    pub lo: f64,
    pub hi: f64,
    pub observed: f64,
    pub outside: bool,
    pub n_null: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullReport {
    pub intervals: Vec<NullInterval>,
    pub outside_count: usize,
    /// Observed universes without any null estimate.
    pub missing: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Builds the 95% null interval of every observed universe.
///
/// `null` holds `(uid, estimate)` pairs pooled over all shuffles.
pub fn null_intervals(null: &[(usize, f64)], observed: &BTreeMap<usize, f64>) -> NullReport {
    let mut by_uid: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(uid, e) in null {
        if e.is_finite() {
            by_uid.entry(uid).or_default().push(e);
        }
    }
    let mut intervals = Vec::new();
    let mut missing = Vec::new();
    let mut thin = Vec::new();
    for (&uid, &obs) in observed {
        let Some(v) = by_uid.get_mut(&uid) else {
            missing.push(uid);
            continue;
        };
        v.sort_by(f64::total_cmp);
        if v.len() < MIN_NULL_ESTIMATES {
            thin.push(uid);
        }
        let lo = percentile(v, 0.025);
        let hi = percentile(v, 0.975);
        intervals.push(NullInterval {
            uid,
            lo,
            hi,
            observed: obs,
            outside: obs < lo || obs > hi,
            n_null: v.len(),
        });
    }
    let mut warnings = Vec::new();
    if !thin.is_empty() {
        warnings.push(format!(
            "{} universe(s) have fewer than {MIN_NULL_ESTIMATES} null estimates; interval ends are coarse",
            thin.len()
        ));
    }
    if !missing.is_empty() {
        warnings.push(format!("{} universe(s) have no null estimates and are excluded", missing.len()));
    }
    NullReport {
        outside_count: intervals.iter().filter(|i| i.outside).count(),
        intervals,
        missing,
        warnings,
    }
}
