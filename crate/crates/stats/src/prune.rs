//! Model-quality cutoff on NRMSE.

use serde::Serialize;

use crate::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pruned {
    /// Universes with `fit <= cutoff` or no fit at all, in input order.
    pub kept: Vec<usize>,
    /// Subset of `kept` that had no fit metric.
    pub unscored: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Keeps universes whose fit is at most `cutoff`; those without a fit are
/// kept and flagged. Removing everything is reported as an error.
pub fn prune(fits: &[(usize, Option<f64>)], cutoff: f64) -> Result<Pruned, StatsError> {
    if !(cutoff >= 0.0) {
        return Err(StatsError::InvalidInput(format!("cutoff must be non-negative, got {cutoff}")));
    }
    let mut p = Pruned {
        kept: Vec::new(),
        unscored: Vec::new(),
        removed: Vec::new(),
    };
    for &(uid, fit) in fits {
        match fit {
            None => {
                p.kept.push(uid);
                p.unscored.push(uid);
            }
            Some(f) if f <= cutoff => p.kept.push(uid),
            Some(_) => p.removed.push(uid),
        }
    }
    if p.kept.is_empty() && !fits.is_empty() {
        return Err(StatsError::EmptyAfterPruning { cutoff });
    }
    Ok(p)
}
