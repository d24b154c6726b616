use multiverse_core::{DecisionGraph, MultiverseSpec};

use crate::sensitivity::SensitivityReport;

/// Copies sensitivity scores onto the matching graph nodes.
pub fn attach_sensitivity(mut graph: DecisionGraph, report: &SensitivityReport) -> DecisionGraph {
    for node in &mut graph.nodes {
        node.sensitivity = report.score(&node.name);
    }
    graph
}

pub fn build_decision_graph(spec: &MultiverseSpec, report: &SensitivityReport) -> DecisionGraph {
    attach_sensitivity(DecisionGraph::from_spec(spec), report)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use multiverse_core::{build_summary, enumerate, parse_spec, SensitivityMethod};

    use super::*;
    use crate::sensitivity_report;

    #[test]
    fn scores_land_on_nodes() {
        let spec = parse_spec("{{a = 1, 2}} {{b = 1, 2}}\n", "x.py").unwrap();
        let us = enumerate(&spec).unwrap();
        let table = build_summary(&spec, &us);
        // estimate depends on a only
        let est: BTreeMap<usize, f64> = us
            .iter()
            .map(|u| (u.id, u.assignment["a"].index as f64 * 10.0 + u.assignment["b"].index as f64 * 0.1))
            .collect();
        let report = sensitivity_report(&table, &est, SensitivityMethod::Ks);
        let g = build_decision_graph(&spec, &report);
        assert_eq!(g.nodes[0].sensitivity, Some(1.0));
        assert_eq!(g.nodes[1].sensitivity, Some(0.5));
        assert_eq!(report.max, Some(1.0));
        assert!(g.dependency_edges.is_empty());
    }
}
