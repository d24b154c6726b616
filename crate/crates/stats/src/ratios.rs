//! Option make-up of a selection of universes compared with the whole multiverse.

use std::collections::BTreeSet;

use multiverse_core::SummaryTable;
use serde::Serialize;

use crate::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionRatio {
    pub option: String,
    pub count: usize,
    pub fraction: f64,
    pub baseline: f64,
    /// More common in the selection than in the full multiverse.
    pub dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRatios {
    pub decision: String,
    /// Selected universes in which the decision is active.
    pub active: usize,
    pub options: Vec<OptionRatio>,
}

/// Per-decision option fractions over the selected universes.
///
/// Fractions are relative to the selected universes where the decision is
/// active; decisions inactive in the whole selection are left out.
pub fn option_ratios(table: &SummaryTable, subset: &[usize]) -> Result<Vec<DecisionRatios>, StatsError> {
    let subset: BTreeSet<usize> = subset.iter().copied().collect();
    if subset.is_empty() {
        return Err(StatsError::EmptySelection);
    }
    if let Some(&u) = subset.iter().find(|&&u| table.row(u).is_none()) {
        return Err(StatsError::UnknownUniverse(u));
    }
    let mut out = Vec::new();
    for (c, d) in table.decisions.iter().enumerate() {
        let k = d.options.len();
        let mut base = vec![0usize; k];
        let mut sel = vec![0usize; k];
        for row in &table.rows {
            if let Some(o) = row.choices[c] {
                base[o] += 1;
                if subset.contains(&row.uid) {
                    sel[o] += 1;
                }
            }
        }
        let active: usize = sel.iter().sum();
        if active == 0 {
            continue;
        }
        let base_active: usize = base.iter().sum();
        out.push(DecisionRatios {
            decision: d.name.clone(),
            active,
            options: (0..k)
                .map(|o| OptionRatio {
                    option: d.options[o].clone(),
                    count: sel[o],
                    fraction: sel[o] as f64 / active as f64,
                    baseline: base[o] as f64 / base_active as f64,
                    dominant: sel[o] * base_active > base[o] * active,
                })
                .collect(),
        });
    }
    Ok(out)
}
