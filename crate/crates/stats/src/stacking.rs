//! Stacking weights over universes from held-out log predictive densities.

use serde::Serialize;

use crate::StatsError;

const MAX_ITER: usize = 10_000;
const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stacking {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting from the uniform weights.
    pub trace: Vec<f64>,
}

/// `Σ_i log Σ_m w_m exp(L[i][m])`, evaluated stably.
pub fn stacking_objective(lpd: &[Vec<f64>], w: &[f64]) -> f64 {
    lpd.iter()
        .map(|row| {
            let r = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            r + row.iter().zip(w).map(|(l, w)| w * (l - r).exp()).sum::<f64>().ln()
        })
        .sum()
}

/// Row-wise `exp(L - max)` and its weighted sums; the gradient of the
/// objective is `Σ_i e[i][m] / s[i]`.
fn gradient(scaled: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    for row in scaled {
        let s: f64 = row.iter().zip(w).map(|(e, w)| e * w).sum();
        for (gm, e) in g.iter_mut().zip(row) {
            *gm += e / s;
        }
    }
    g
}

/// Maximizes the stacking objective over the simplex with exponentiated
/// gradient steps from uniform weights. Each step is backtracked until the
/// objective does not decrease.
///
/// `lpd` is `n` held-out points by `M` universes.
pub fn stacking_weights(lpd: &[Vec<f64>]) -> Result<Stacking, StatsError> {
    let n = lpd.len();
    if n == 0 {
        return Err(StatsError::InvalidInput("no held-out points".into()));
    }
    let m = lpd[0].len();
    if m == 0 {
        return Err(StatsError::InvalidInput("no universes".into()));
    }
    for (row, r) in lpd.iter().enumerate() {
        if r.len() != m {
            return Err(StatsError::InvalidInput(format!("row {row} has {} entries, expected {m}", r.len())));
        }
        if let Some(col) = r.iter().position(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite { row, col });
        }
    }
    if m == 1 {
        let objective = stacking_objective(lpd, &[1.0]);
        return Ok(Stacking {
            weights: vec![1.0],
            objective,
            iterations: 0,
            trace: vec![objective],
        });
    }

    let scaled: Vec<Vec<f64>> = lpd
        .iter()
        .map(|row| {
            let r = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter().map(|l| (l - r).exp()).collect()
        })
        .collect();
    let mut w = vec![1.0 / m as f64; m];
    let mut obj = stacking_objective(lpd, &w);
    let mut trace = vec![obj];
    let mut eta = 1.0;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        // Per-point gradient, so the step size does not depend on n.
        let g: Vec<f64> = gradient(&scaled, &w).iter().map(|g| g / n as f64).collect();
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        while eta > 1e-12 {
            let mut cand: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w * (eta * (g - gmax)).exp()).collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|c| *c /= total);
            let new = stacking_objective(lpd, &cand);
            if new >= obj {
                accepted = Some((cand, new));
                break;
            }
            eta /= 2.0;
        }
        let Some((cand, new)) = accepted else { break };
        let change = (new - obj).abs();
        w = cand;
        obj = new;
        trace.push(obj);
        eta = (eta * 2.0).min(1e6);
        if change <= REL_TOL * obj.abs().max(1.0) {
            break;
        }
    }
    Ok(Stacking {
        weights: w,
        objective: obj,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_universe() {
        let s = stacking_weights(&[vec![-1.0], vec![-2.0]]).unwrap();
        assert_eq!(s.weights, vec![1.0]);
    }

    #[test]
    fn identical_columns_stay_uniform() {
        let lpd: Vec<Vec<f64>> = (0..5).map(|i| vec![-(i as f64); 2]).collect();
        let s = stacking_weights(&lpd).unwrap();
        assert_eq!(s.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn dominant_universe_takes_the_weight() {
        let lpd: Vec<Vec<f64>> = (0..10).map(|i| vec![-3.0 - i as f64 * 0.1, -1.5 - i as f64 * 0.1]).collect();
        let s = stacking_weights(&lpd).unwrap();
        assert!(s.weights[1] >= 0.9);
        assert!(s.objective >= stacking_objective(&lpd, &[1.0, 0.0]));
        let best_grid = (0..=100)
            .map(|i| {
                let a = i as f64 / 100.0;
                stacking_objective(&lpd, &[a, 1.0 - a])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(s.objective >= best_grid - 1e-4);
        assert!(s.trace.windows(2).all(|t| t[1] >= t[0]));
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            stacking_weights(&[vec![0.0, f64::NAN]]),
            Err(StatsError::NonFinite { row: 0, col: 1 })
        );
        assert!(stacking_weights(&[]).is_err());
    }
}
