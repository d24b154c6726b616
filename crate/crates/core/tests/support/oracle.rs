//! Random spec generator plus a brute-force enumeration oracle.
//!
//! The oracle shares nothing with the library: conditions are evaluated from
//! the generator's own AST, and universes come from the full cross product over
//! every decision followed by filtering and projection.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

#[derive(Debug, Clone)]
pub struct RDecision {
    pub name: String,
    pub options: Vec<String>,
    pub numeric: bool,
    pub is_block: bool,
}

#[derive(Debug, Clone)]
pub enum Cond {
    Eq(usize, usize),
    Ne(usize, usize),
    IdxEq(usize, usize),
    IdxNe(usize, usize),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone)]
pub enum RConstraint {
    OnDecision(usize, Cond),
    OnOption(usize, usize, Cond),
    Link(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct RandSpec {
    pub source: String,
    pub decisions: Vec<RDecision>,
    /// Placeholders used in the always-present text.
    pub top: BTreeSet<usize>,
    /// (placeholder, block version) pairs for uses inside the decision block.
    pub scoped: BTreeSet<(usize, usize)>,
    pub block: Option<usize>,
    pub constraints: Vec<RConstraint>,
}

impl RDecision {
    fn literal(&self, o: usize) -> String {
        if self.numeric {
            self.options[o].clone()
        } else {
            format!("\"{}\"", self.options[o].trim_matches('\''))
        }
    }
}

impl Cond {
    fn render(&self, ds: &[RDecision]) -> String {
        match self {
            Cond::Eq(d, o) => format!("{} == {}", ds[*d].name, ds[*d].literal(*o)),
            Cond::Ne(d, o) => format!("{} != {}", ds[*d].name, ds[*d].literal(*o)),
            Cond::IdxEq(d, o) => format!("index({}) == {o}", ds[*d].name),
            Cond::IdxNe(d, o) => format!("index({}) != {o}", ds[*d].name),
            Cond::Not(c) => format!("not ({})", c.render(ds)),
            Cond::And(a, b) => format!("({} and {})", a.render(ds), b.render(ds)),
            Cond::Or(a, b) => format!("({} or {})", a.render(ds), b.render(ds)),
        }
    }

    /// Inactive decisions never equal anything.
    pub fn eval(&self, s: &[Option<usize>]) -> bool {
        match self {
            Cond::Eq(d, o) | Cond::IdxEq(d, o) => s[*d] == Some(*o),
            Cond::Ne(d, o) | Cond::IdxNe(d, o) => s[*d] != Some(*o),
            Cond::Not(c) => !c.eval(s),
            Cond::And(a, b) => a.eval(s) && b.eval(s),
            Cond::Or(a, b) => a.eval(s) || b.eval(s),
        }
    }
}

fn random_cond<R: Rng>(rng: &mut R, ds: &[RDecision], depth: u32) -> Cond {
    if depth == 0 || rng.random_bool(0.5) {
        let d = rng.random_range(0..ds.len());
        let o = rng.random_range(0..ds[d].options.len());
        return match rng.random_range(0..4) {
            0 => Cond::Eq(d, o),
            1 => Cond::Ne(d, o),
            2 => Cond::IdxEq(d, o),
            _ => Cond::IdxNe(d, o),
        };
    }
    match rng.random_range(0..3) {
        0 => Cond::Not(Box::new(random_cond(rng, ds, depth - 1))),
        1 => Cond::And(
            Box::new(random_cond(rng, ds, depth - 1)),
            Box::new(random_cond(rng, ds, depth - 1)),
        ),
        _ => Cond::Or(
            Box::new(random_cond(rng, ds, depth - 1)),
            Box::new(random_cond(rng, ds, depth - 1)),
        ),
    }
}

/// Generates a spec with at most 5 decisions of at most 4 options each.
pub fn generate<R: Rng>(rng: &mut R) -> RandSpec {
    let n = rng.random_range(1..=5);
    let has_block = rng.random_bool(0.4);
    let mut decisions = Vec::new();
    for i in 0..n {
        let k = rng.random_range(2..=4);
        let is_block = has_block && i == 0;
        let numeric = !is_block && rng.random_bool(0.5);
        let options = (0..k)
            .map(|j| {
                if is_block {
                    format!("v{j}")
                } else if numeric {
                    format!("{}", 10 * (j + 1) + i)
                } else {
                    format!("'x{i}{j}'")
                }
            })
            .collect();
        decisions.push(RDecision {
            name: if is_block { "B".into() } else { format!("d{i}") },
            options,
            numeric,
            is_block,
        });
    }
    let block = has_block.then_some(0);

    let mut top = BTreeSet::new();
    let mut scoped = BTreeSet::new();
    for (i, d) in decisions.iter().enumerate() {
        if d.is_block {
            continue;
        }
        match block {
            Some(b) if rng.random_bool(0.5) => {
                let versions = decisions[b].options.len();
                for v in 0..versions {
                    if rng.random_bool(0.5) {
                        scoped.insert((i, v));
                    }
                }
                if !scoped.iter().any(|&(p, _)| p == i) {
                    scoped.insert((i, rng.random_range(0..versions)));
                }
            }
            _ => {
                top.insert(i);
            }
        }
    }

    let mut constraints = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let t = rng.random_range(0..n);
        let cond = random_cond(rng, &decisions, 2);
        if rng.random_bool(0.5) {
            constraints.push(RConstraint::OnDecision(t, cond));
        } else {
            let o = rng.random_range(0..decisions[t].options.len());
            constraints.push(RConstraint::OnOption(t, o, cond));
        }
    }
    if n >= 2 && rng.random_bool(0.4) {
        let a = rng.random_range(0..n);
        let partners: Vec<usize> = (0..n)
            .filter(|&b| b != a && decisions[b].options.len() == decisions[a].options.len())
            .collect();
        if !partners.is_empty() {
            let b = partners[rng.random_range(0..partners.len())];
            constraints.push(RConstraint::Link(vec![a.min(b), a.max(b)]));
        }
    }

    let source = render(&decisions, &top, &scoped, block, &constraints);
    RandSpec {
        source,
        decisions,
        top,
        scoped,
        block,
        constraints,
    }
}

fn render(
    ds: &[RDecision],
    top: &BTreeSet<usize>,
    scoped: &BTreeSet<(usize, usize)>,
    block: Option<usize>,
    constraints: &[RConstraint],
) -> String {
    let mut defined = BTreeSet::new();
    let use_of = |i: usize, defined: &mut BTreeSet<usize>| {
        if defined.insert(i) {
            format!("{{{{{} = {}}}}}", ds[i].name, ds[i].options.join(", "))
        } else {
            format!("{{{{{}}}}}", ds[i].name)
        }
    };
    let mut src = String::from("import sys\n");
    for &i in top {
        src.push_str(&format!("v{i} = {}\n", use_of(i, &mut defined)));
    }
    if let Some(b) = block {
        for (v, label) in ds[b].options.iter().enumerate() {
            src.push_str(&format!("# --- (B) {label}\n"));
            src.push_str(&format!("mode = '{label}'\n"));
            for &(p, pv) in scoped {
                if pv == v {
                    src.push_str(&format!("w{p} = {}\n", use_of(p, &mut defined)));
                }
            }
        }
    }
    let items: Vec<String> = constraints
        .iter()
        .map(|c| match c {
            RConstraint::OnDecision(t, cond) => format!(
                "{{\"{}\": \"{}\", \"condition\": \"{}\"}}",
                if ds[*t].is_block { "block" } else { "decision" },
                ds[*t].name,
                cond.render(ds).replace('"', "\\\"")
            ),
            RConstraint::OnOption(t, o, cond) => format!(
                "{{\"decision\": \"{}\", \"index\": {o}, \"condition\": \"{}\"}}",
                ds[*t].name,
                cond.render(ds).replace('"', "\\\"")
            ),
            RConstraint::Link(m) => format!(
                "{{\"link\": [{}]}}",
                m.iter().map(|&i| format!("\"{}\"", ds[i].name)).collect::<Vec<_>>().join(", ")
            ),
        })
        .collect();
    if !items.is_empty() {
        src.push_str("# --- (BOBA_CONFIG)\n{\"constraints\": [\n  ");
        src.push_str(&items.join(",\n  "));
        src.push_str("\n]}\n");
    }
    src
}

impl RandSpec {
    /// Activity of every decision given a full assignment and the set of
    /// explicitly switched-off decisions.
    fn state(&self, full: &[usize], off: &[bool]) -> Vec<Option<usize>> {
        let block_on = self.block.map(|b| !off[b]);
        (0..self.decisions.len())
            .map(|i| {
                let active = !off[i]
                    && match (self.decisions[i].is_block, block_on) {
                        (true, _) => true,
                        (false, on) => {
                            self.top.contains(&i)
                                || (on == Some(true)
                                    && self.scoped.contains(&(i, full[self.block.unwrap()])))
                        }
                    };
                active.then_some(full[i])
            })
            .collect()
    }

    /// Brute-force universes as option-index vectors in declaration order,
    /// sorted and deduplicated.
    pub fn oracle(&self) -> Vec<Vec<Option<usize>>> {
        let radix: Vec<usize> = self.decisions.iter().map(|d| d.options.len()).collect();
        let total: usize = radix.iter().product();
        let mut out = BTreeSet::new();
        for mut code in 0..total {
            let mut full = vec![0; radix.len()];
            for i in (0..radix.len()).rev() {
                full[i] = code % radix[i];
                code /= radix[i];
            }
            let mut off = vec![false; radix.len()];
            let mut s = self.state(&full, &off);
            loop {
                let mut changed = false;
                for c in &self.constraints {
                    if let RConstraint::OnDecision(t, cond) = c {
                        if s[*t].is_some() && !cond.eval(&s) {
                            off[*t] = true;
                            s = self.state(&full, &off);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let ok = self.constraints.iter().all(|c| match c {
                RConstraint::OnDecision(..) => true,
                RConstraint::OnOption(t, o, cond) => s[*t] != Some(*o) || cond.eval(&s),
                RConstraint::Link(m) => {
                    let active: BTreeSet<usize> = m.iter().filter_map(|&d| s[d]).collect();
                    active.len() <= 1
                }
            });
            if ok {
                out.insert(s);
            }
        }
        out.into_iter().collect()
    }
}
