//! Decision-level view of a spec: which decisions exist, in what order they are
//! first used, and which ones depend procedurally on others.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::spec::{Constraint, DecisionKind, MultiverseSpec, Segment, UNIVERSE_PLACEHOLDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionNode {
    pub name: String,
    pub kind: DecisionKind,
    pub options: Vec<String>,
    /// Filled in once outcomes are available.
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionGraph {
    /// Nodes in first-use order.
    pub nodes: Vec<DecisionNode>,
    pub temporal_edges: Vec<Edge>,
    pub dependency_edges: Vec<Edge>,
}

impl DecisionGraph {
    /// Derives the graph structure from a spec, without sensitivity scores.
    pub fn from_spec(spec: &MultiverseSpec) -> Self {
        let first_use = |name: &str, kind: DecisionKind, declared: usize| -> usize {
            match kind {
                DecisionKind::Block => declared,
                DecisionKind::Placeholder => spec
                    .segments()
                    .filter_map(|(_, _, s)| match s {
                        Segment::Placeholder { name: n, line, .. } if n == name => Some(*line),
                        _ => None,
                    })
                    .min()
                    .unwrap_or(declared),
            }
        };
        let mut order: Vec<(usize, usize)> = spec
            .decisions
            .iter()
            .enumerate()
            .map(|(i, d)| (first_use(&d.name, d.kind, d.line), i))
            .collect();
        order.sort();

        let nodes: Vec<DecisionNode> = order
            .iter()
            .map(|&(_, i)| {
                let d = &spec.decisions[i];
                DecisionNode {
                    name: d.name.clone(),
                    kind: d.kind,
                    options: d.options.clone(),
                    sensitivity: None,
                }
            })
            .collect();
        let temporal_edges = nodes
            .windows(2)
            .map(|w| Edge {
                from: w[0].name.clone(),
                to: w[1].name.clone(),
            })
            .collect();

        let mut deps: BTreeSet<(usize, usize)> = BTreeSet::new();
        let idx = |name: &str| spec.decision_index(name);

        for c in &spec.constraints {
            if let Constraint::Procedural {
                target, condition, ..
            } = c
            {
                let t = idx(target).expect("validated");
                for r in condition.decisions() {
                    let r = idx(&r).expect("validated");
                    if r != t {
                        deps.insert((r, t));
                    }
                }
            }
        }

        let placeholders_in = |block: &str, version: Option<&str>| -> BTreeSet<usize> {
            spec.block(block)
                .into_iter()
                .flat_map(|b| b.versions.iter())
                .filter(|v| version.is_none() || v.label.as_deref() == version)
                .flat_map(|v| v.placeholders())
                .filter(|&p| p != UNIVERSE_PLACEHOLDER)
                .filter_map(idx)
                .collect()
        };

        for block in spec.blocks.iter().filter(|b| b.is_decision()) {
            let owner = idx(&block.name).expect("decision block");
            let per_version: Vec<BTreeSet<usize>> = block
                .versions
                .iter()
                .map(|v| placeholders_in(&block.name, v.label.as_deref()))
                .collect();
            let all: BTreeSet<usize> = per_version.iter().flatten().copied().collect();
            for p in all {
                if !per_version.iter().all(|s| s.contains(&p)) {
                    deps.insert((owner, p));
                }
            }
        }

        if let Some(graph) = &spec.graph {
            for (start, node) in graph.nodes.iter().enumerate() {
                if node.version.is_none() {
                    continue;
                }
                let Some(owner) = idx(&node.block) else { continue };
                let mut seen = BTreeSet::new();
                let mut stack: Vec<usize> = graph.children(start).collect();
                while let Some(n) = stack.pop() {
                    if !seen.insert(n) {
                        continue;
                    }
                    stack.extend(graph.children(n));
                    let child = &graph.nodes[n];
                    let mut reached = placeholders_in(&child.block, child.version.as_deref());
                    if spec.block(&child.block).is_some_and(|b| b.is_decision()) {
                        reached.extend(idx(&child.block));
                    }
                    for d in reached {
                        if d != owner {
                            deps.insert((owner, d));
                        }
                    }
                }
            }
        }

        let dependency_edges = deps
            .into_iter()
            .map(|(a, b)| Edge {
                from: spec.decisions[a].name.clone(),
                to: spec.decisions[b].name.clone(),
            })
            .collect();

        DecisionGraph {
            nodes,
            temporal_edges,
            dependency_edges,
        }
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut DecisionNode> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }
}
