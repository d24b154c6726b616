//! How much a decision shifts the distribution of outcomes.

use std::collections::BTreeMap;

use multiverse_core::{SensitivityMethod, SummaryTable};
use serde::Serialize;

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the two
/// empirical CDFs. Both samples must be non-empty.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs two non-empty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    // Work in units of 1/(na*nb) so the result is a single rounding.
    let mut d = 0usize;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i * nb).abs_diff(j * na));
    }
    d as f64 / (na * nb) as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median of the pairwise KS statistics between option groups. Empty groups
/// are ignored; fewer than two non-empty groups gives `None`.
pub fn ks_sensitivity(groups: &[Vec<f64>]) -> Option<f64> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 {
        return None;
    }
    let mut k = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            k.push(ks_statistic(groups[i], groups[j]));
        }
    }
    Some(median(k))
}

/// One-way ANOVA F statistic over the non-empty groups.
///
/// `None` with fewer than two groups or no within-group degrees of freedom.
/// Zero within-group variance yields `+inf`, or `0` when the group means
/// coincide as well.
pub fn f_sensitivity(groups: &[Vec<f64>]) -> Option<f64> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if k < 2 || n <= k {
        return None;
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in &groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let msb = ssb / (k - 1) as f64;
    let msw = ssw / (n - k) as f64;
    // Rounding leaves tiny residues when every group is constant.
    let scale = groups.iter().flat_map(|g| g.iter()).fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let eps = (f64::EPSILON * scale).powi(2) * n as f64;
    if ssw <= eps {
        return Some(if ssb <= eps { 0.0 } else { f64::INFINITY });
    }
    Some(msb / msw)
}

/// Estimates per option of one decision; universes where the decision is
/// inactive, or without an estimate, are left out.
pub fn group_estimates(
    table: &SummaryTable,
    column: usize,
    estimates: &BTreeMap<usize, f64>,
) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); table.decisions[column].options.len()];
    for row in &table.rows {
        if let (Some(o), Some(&e)) = (row.choices[column], estimates.get(&row.uid)) {
            groups[o].push(e);
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityScore {
    pub decision: String,
    /// `None` when undefined; may be `+inf` for the F method.
    pub score: Option<f64>,
    pub group_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub method: SensitivityMethod,
    pub scores: Vec<SensitivityScore>,
    /// Over finite defined scores, for colour scaling.
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl SensitivityReport {
    pub fn score(&self, decision: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.decision == decision)?.score
    }
}

pub fn sensitivity_report(
    table: &SummaryTable,
    estimates: &BTreeMap<usize, f64>,
    method: SensitivityMethod,
) -> SensitivityReport {
    let scores: Vec<SensitivityScore> = table
        .decisions
        .iter()
        .enumerate()
        .map(|(c, d)| {
            let groups = group_estimates(table, c, estimates);
            let score = match method {
                SensitivityMethod::Ks => ks_sensitivity(&groups),
                SensitivityMethod::F => f_sensitivity(&groups),
            };
            SensitivityScore {
                decision: d.name.clone(),
                score,
                group_sizes: groups.iter().map(Vec::len).collect(),
            }
        })
        .collect();
    let finite = || scores.iter().filter_map(|s| s.score).filter(|s| s.is_finite());
    SensitivityReport {
        method,
        min: finite().reduce(f64::min),
        max: finite().reduce(f64::max),
        scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_sensitivity(&[vec![1.0, 2.0], vec![1.0, 2.0]]), Some(0.0));
        assert_eq!(ks_sensitivity(&[vec![0.0; 3], vec![1.0; 3]]), Some(1.0));
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![2.0, 3.0, 4.0];
        let c = vec![10.0, 11.0, 12.0];
        assert_eq!(ks_statistic(&a, &b), 1.0 / 3.0);
        assert_eq!(ks_statistic(&a, &c), 1.0);
        assert_eq!(ks_statistic(&b, &c), 1.0);
        assert_eq!(ks_sensitivity(&[a, b, c]), Some(1.0));
    }

    #[test]
    fn ks_even_pair_count_uses_middle_mean() {
        // four groups -> six pairs
        let g = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        // pairs: 0,1,1,1,1,0 -> sorted 0,0,1,1,1,1 -> median 1
        assert_eq!(ks_sensitivity(&g), Some(1.0));
        let g = vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.5, 2.0], vec![3.0]];
        let mut k = vec![];
        for i in 0..4 {
            for j in i + 1..4 {
                k.push(ks_statistic(&g[i], &g[j]));
            }
        }
        k.sort_by(f64::total_cmp);
        assert_eq!(ks_sensitivity(&g), Some((k[2] + k[3]) / 2.0));
    }

    #[test]
    fn ks_ties_across_samples() {
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
    }

    #[test]
    fn undefined_with_one_group() {
        assert_eq!(ks_sensitivity(&[vec![1.0], vec![]]), None);
        assert_eq!(f_sensitivity(&[vec![1.0, 2.0], vec![]]), None);
        assert_eq!(f_sensitivity(&[vec![1.0], vec![2.0]]), None);
    }

    #[test]
    fn f_degenerate_cases() {
        assert_eq!(f_sensitivity(&[vec![3.0; 4], vec![3.0; 4]]), Some(0.0));
        assert_eq!(f_sensitivity(&[vec![0.1; 2], vec![0.3; 2]]), Some(f64::INFINITY));
    }

    #[test]
    fn f_textbook_example() {
        // means 0.5, 10.5; grand 5.5; SSB = 8*25 = 200; SSW = 8*0.25 = 2
        // F = (200/1)/(2/6) = 600
        let f = f_sensitivity(&[vec![0.0, 0.0, 1.0, 1.0], vec![10.0, 10.0, 11.0, 11.0]]).unwrap();
        assert!((f - 600.0).abs() < 1e-9);
    }
}
