//! Expansion of a spec into the set of constraint-compatible universes.
//!
//! Expansion order: code graph paths first, then free decision-block versions
//! along each path, then the placeholders that occur in the chosen text, then
//! constraint filtering. A placeholder that only occurs in an unchosen version
//! therefore never multiplies the universe count.
//!
//! Constraint semantics:
//!
//! * A condition attached to a whole decision deactivates that decision when it
//!   is false. A deactivated decision block drops out of the script, which in
//!   turn deactivates placeholders that only occurred inside it. A deactivated
//!   placeholder that still occurs in the script is filled with its first
//!   option. Deactivation is applied repeatedly until nothing changes.
//! * A condition attached to one option removes universes choosing that option
//!   when the condition is false.
//! * Linked decisions must share the same option index when active.
//!
//! Universes that become identical once inactive decisions are dropped are
//! collapsed into one.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::EnumerateError;
use crate::expr::{Chosen, Expr};
use crate::graph::enumerate_paths;
use crate::spec::{Constraint, DecisionKind, MultiverseSpec, Segment, UNIVERSE_PLACEHOLDER};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    pub value: String,
}

/// One analytic path through the multiverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    /// 1-based, stable across runs for the same spec.
    pub id: usize,
    /// Active decisions only.
    pub assignment: BTreeMap<String, Choice>,
    /// Blocks in execution order with the chosen version label.
    pub block_path: Vec<(String, Option<String>)>,
}

impl Universe {
    /// Option index per spec decision, `None` where inactive.
    pub fn choices(&self, spec: &MultiverseSpec) -> Vec<Option<usize>> {
        spec.decisions
            .iter()
            .map(|d| self.assignment.get(&d.name).map(|c| c.index))
            .collect()
    }
}

/// Non-fatal finding from enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub universes: Vec<Universe>,
    pub warnings: Vec<Warning>,
}

/// Enumerates all universes; see [`enumerate_with_warnings`].
pub fn enumerate(spec: &MultiverseSpec) -> Result<Vec<Universe>, EnumerateError> {
    enumerate_with_warnings(spec).map(|e| e.universes)
}

struct Ctx<'a> {
    spec: &'a MultiverseSpec,
    index_of: HashMap<&'a str, usize>,
    /// decision index -> block index, for decision blocks.
    block_of: Vec<Option<usize>>,
    /// block index -> decision index, for decision blocks.
    decision_of_block: Vec<Option<usize>>,
    on_decision: Vec<(usize, &'a Expr)>,
    on_option: Vec<(usize, usize, &'a Expr)>,
    links: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(spec: &'a MultiverseSpec) -> Self {
        let index_of: HashMap<&str, usize> = spec
            .decisions
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), i))
            .collect();
        let block_of = spec
            .decisions
            .iter()
            .map(|d| match d.kind {
                DecisionKind::Block => spec.blocks.iter().position(|b| b.name == d.name),
                DecisionKind::Placeholder => None,
            })
            .collect();
        let decision_of_block = spec
            .blocks
            .iter()
            .map(|b| {
                b.is_decision()
                    .then(|| index_of[b.name.as_str()])
            })
            .collect();
        let mut on_decision = Vec::new();
        let mut on_option = Vec::new();
        let mut links = Vec::new();
        for c in &spec.constraints {
            match c {
                Constraint::Procedural {
                    target,
                    option: None,
                    condition,
                    ..
                } => on_decision.push((index_of[target.as_str()], condition)),
                Constraint::Procedural {
                    target,
                    option: Some(o),
                    condition,
                    ..
                } => on_option.push((index_of[target.as_str()], *o, condition)),
                Constraint::Link { members, .. } => {
                    links.push(members.iter().map(|m| index_of[m.as_str()]).collect())
                }
            }
        }
        Ctx {
            spec,
            index_of,
            block_of,
            decision_of_block,
            on_decision,
            on_option,
            links,
        }
    }

    fn holds(&self, expr: &Expr, choices: &[Option<usize>]) -> bool {
        expr.eval(&|name: &str| {
            let i = *self.index_of.get(name)?;
            choices[i].map(|index| Chosen {
                index,
                value: &self.spec.decisions[i].options[index],
            })
        })
    }

    /// Placeholder decisions occurring in the given (block, version) nodes.
    fn used_placeholders(&self, nodes: &[(usize, usize)]) -> BTreeSet<usize> {
        nodes
            .iter()
            .flat_map(|&(b, v)| self.spec.blocks[b].versions[v].segments.iter())
            .filter_map(|s| match s {
                Segment::Placeholder { name, .. } if name != UNIVERSE_PLACEHOLDER => {
                    Some(self.index_of[name.as_str()])
                }
                _ => None,
            })
            .collect()
    }

    /// Applies decision-level deactivation; returns the surviving nodes.
    fn deactivate(&self, choices: &mut [Option<usize>], mut nodes: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        loop {
            let mut changed = false;
            for &(target, expr) in &self.on_decision {
                if choices[target].is_none() || self.holds(expr, choices) {
                    continue;
                }
                choices[target] = None;
                changed = true;
                if let Some(block) = self.block_of[target] {
                    nodes.retain(|&(b, _)| b != block);
                    let used = self.used_placeholders(&nodes);
                    for (i, d) in self.spec.decisions.iter().enumerate() {
                        if d.kind == DecisionKind::Placeholder && !used.contains(&i) {
                            choices[i] = None;
                        }
                    }
                }
            }
            if !changed {
                return nodes;
            }
        }
    }

    fn admissible(&self, choices: &[Option<usize>]) -> bool {
        self.on_option
            .iter()
            .all(|&(t, o, expr)| choices[t] != Some(o) || self.holds(expr, choices))
            && self.links.iter().all(|group| {
                let mut active = group.iter().filter_map(|&d| choices[d]);
                match active.next() {
                    Some(first) => active.all(|i| i == first),
                    None => true,
                }
            })
    }
}

/// Advances a mixed-radix counter; returns false once it wraps around.
fn advance(counter: &mut [usize], radix: &[usize]) -> bool {
    for (c, &r) in counter.iter_mut().zip(radix).rev() {
        *c += 1;
        if *c < r {
            return true;
        }
        *c = 0;
    }
    false
}

type Key = (Vec<Option<usize>>, Vec<(usize, usize)>);

/// Enumerates all universes and reports constraints that can never apply.
///
/// Universes are ordered lexicographically by option index in decision
/// declaration order (an inactive decision sorts first), then by code graph
/// path; ids are assigned from 1 in that order.
pub fn enumerate_with_warnings(spec: &MultiverseSpec) -> Result<Enumeration, EnumerateError> {
    let ctx = Ctx::new(spec);
    let n = spec.decisions.len();
    let paths = enumerate_paths(spec.graph.as_ref(), &spec.blocks)?;

    let procedural: Vec<(usize, Vec<usize>)> = spec
        .constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Procedural {
                target, condition, ..
            } => Some((
                ctx.index_of[target.as_str()],
                condition
                    .decisions()
                    .iter()
                    .map(|r| ctx.index_of[r.as_str()])
                    .collect(),
            )),
            Constraint::Link { .. } => None,
        })
        .collect();
    let mut together: Vec<Vec<bool>> = procedural.iter().map(|(_, r)| vec![false; r.len()]).collect();

    let mut found: BTreeMap<Key, usize> = BTreeMap::new();

    for (path_idx, path) in paths.iter().enumerate() {
        let mut base_nodes = Vec::with_capacity(path.len());
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for node in path {
            let b = spec
                .blocks
                .iter()
                .position(|blk| blk.name == node.block)
                .ok_or_else(|| EnumerateError::Graph(format!("unknown block `{}`", node.block)))?;
            let block = &spec.blocks[b];
            let v = match (&node.version, ctx.decision_of_block[b]) {
                (Some(label), Some(d)) => {
                    let v = block.version_index(label).ok_or_else(|| {
                        EnumerateError::Graph(format!("unknown version `{node}`"))
                    })?;
                    fixed.push((d, v));
                    v
                }
                (None, Some(d)) => {
                    free.push((base_nodes.len(), d, block.versions.len()));
                    0
                }
                (_, None) => 0,
            };
            base_nodes.push((b, v));
        }

        let radix: Vec<usize> = free.iter().map(|f| f.2).collect();
        let mut versions = vec![0usize; free.len()];
        loop {
            let mut nodes = base_nodes.clone();
            let mut structural = vec![None; n];
            for &(d, v) in &fixed {
                structural[d] = Some(v);
            }
            for (&(pos, d, _), &v) in free.iter().zip(&versions) {
                nodes[pos].1 = v;
                structural[d] = Some(v);
            }
            let placeholders: Vec<usize> = ctx.used_placeholders(&nodes).into_iter().collect();
            let p_radix: Vec<usize> = placeholders
                .iter()
                .map(|&p| spec.decisions[p].options.len())
                .collect();
            let mut p_choice = vec![0usize; placeholders.len()];
            loop {
                let mut choices = structural.clone();
                for (&p, &o) in placeholders.iter().zip(&p_choice) {
                    choices[p] = Some(o);
                }
                for ((target, refs), seen) in procedural.iter().zip(together.iter_mut()) {
                    if choices[*target].is_some() {
                        for (r, s) in refs.iter().zip(seen.iter_mut()) {
                            *s |= choices[*r].is_some();
                        }
                    }
                }
                let kept = ctx.deactivate(&mut choices, nodes.clone());
                if ctx.admissible(&choices) {
                    found.entry((choices, kept)).or_insert(path_idx);
                }
                if !advance(&mut p_choice, &p_radix) {
                    break;
                }
            }
            if !advance(&mut versions, &radix) {
                break;
            }
        }
    }

    if found.is_empty() {
        return Err(EnumerateError::EmptyMultiverse);
    }

    let mut keys: Vec<(Key, usize)> = found.into_iter().collect();
    keys.sort_by(|((ca, na), pa), ((cb, nb), pb)| ca.cmp(cb).then(pa.cmp(pb)).then(na.cmp(nb)));

    let universes = keys
        .into_iter()
        .enumerate()
        .map(|(i, ((choices, nodes), _))| Universe {
            id: i + 1,
            assignment: choices
                .iter()
                .enumerate()
                .filter_map(|(d, c)| {
                    c.map(|index| {
                        let decision = &spec.decisions[d];
                        (
                            decision.name.clone(),
                            Choice {
                                index,
                                value: decision.options[index].clone(),
                            },
                        )
                    })
                })
                .collect(),
            block_path: nodes
                .iter()
                .map(|&(b, v)| {
                    let block = &spec.blocks[b];
                    (block.name.clone(), block.versions[v].label.clone())
                })
                .collect(),
        })
        .collect();

    let mut warnings = Vec::new();
    let mut proc_iter = spec.constraints.iter().filter(|c| matches!(c, Constraint::Procedural { .. }));
    for ((target, refs), seen) in procedural.iter().zip(&together) {
        let line = proc_iter.next().map_or(0, Constraint::line);
        for (r, s) in refs.iter().zip(seen) {
            if !s && r != target {
                warnings.push(Warning {
                    line,
                    message: format!(
                        "constraint on `{}` refers to `{}`, which is never active together with it",
                        spec.decisions[*target].name, spec.decisions[*r].name
                    ),
                });
            }
        }
    }

    Ok(Enumeration { universes, warnings })
}
