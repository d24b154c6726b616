//! Annotated-script parser.
//!
//! Block markers are comment lines of the form `# --- (NAME)` for a normal
//! block and `# --- (NAME) label` for version `label` of decision block
//! `NAME`. The block named `BOBA_CONFIG` holds a JSON object. Placeholders are
//! written `{{name}}` and may be defined in place as `{{name = a, b, c}}`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::error::SpecError;
use crate::expr::parse_constraint_expr;
use crate::spec::{
    Block, BlockVersion, CodeGraph, Config, Constraint, Decision, DecisionKind, GraphNode,
    MultiverseSpec, Section, Segment, CONFIG_BLOCK, IMPLICIT_BLOCK, UNIVERSE_PLACEHOLDER,
};

const MARKER_PREFIX: &str = "# ---";

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn is_label(s: &str) -> bool {
    !s.is_empty() && !s.contains(':') && !s.chars().any(char::is_whitespace)
}

/// Recognizes a block marker line, returning the block name and optional version label.
pub fn parse_marker(line: &str) -> Option<(String, Option<String>)> {
    let content = line.trim_end_matches(['\n', '\r']);
    let rest = content.strip_prefix(MARKER_PREFIX)?.trim_start();
    let rest = rest.strip_prefix('(')?;
    let close = rest.find(')')?;
    let name = rest[..close].trim();
    if !is_ident(name) {
        return None;
    }
    let label = rest[close + 1..].trim();
    if label.is_empty() {
        Some((name.to_owned(), None))
    } else if is_label(label) {
        Some((name.to_owned(), Some(label.to_owned())))
    } else {
        None
    }
}

/// Maps a file name to the host language, when the extension is known.
pub fn language_for(filename: &str) -> Option<&'static str> {
    match Path::new(filename).extension()?.to_str()? {
        "py" => Some("python"),
        "r" | "R" => Some("R"),
        _ => None,
    }
}

struct RawSection {
    marker: Option<(String, String, Option<String>)>,
    line: usize,
    body_line: usize,
    body: String,
}

fn split_sections(source: &str) -> Vec<RawSection> {
    let mut sections = vec![RawSection {
        marker: None,
        line: 1,
        body_line: 1,
        body: String::new(),
    }];
    for (i, line) in source.split_inclusive('\n').enumerate() {
        let lineno = i + 1;
        if let Some((name, label)) = parse_marker(line) {
            sections.push(RawSection {
                marker: Some((line.to_owned(), name, label)),
                line: lineno,
                body_line: lineno + 1,
                body: String::new(),
            });
        } else {
            sections.last_mut().expect("non-empty").body.push_str(line);
        }
    }
    if sections[0].body.is_empty() {
        sections.remove(0);
    }
    sections
}

/// Finds the byte offset of the closing `}}` for a placeholder opened just before `from`.
fn find_close(text: &str, from: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut quote: Option<u8> = None;
    let mut k = from;
    while k < bytes.len() {
        let c = bytes[k];
        if let Some(q) = quote {
            if c == b'\\' {
                k += 1;
            } else if c == q {
                quote = None;
            }
        } else {
            match c {
                b'\n' => return None,
                b'"' | b'\'' => quote = Some(c),
                b'(' | b'[' | b'{' => depth += 1,
                b'}' if depth == 0 && bytes.get(k + 1) == Some(&b'}') => return Some(k),
                b')' | b']' | b'}' => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
        k += 1;
    }
    None
}

/// Splits `text` on commas that are outside quotes and brackets.
pub fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

/// Top-level `=` that is not part of `==`, `!=`, `<=` or `>=`.
fn definition_split(content: &str) -> Option<(&str, &str)> {
    let b = content.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        if c == b'=' {
            let prev = i.checked_sub(1).map(|j| b[j]);
            let next = b.get(i + 1).copied();
            if next == Some(b'=') || matches!(prev, Some(b'=' | b'!' | b'<' | b'>')) {
                return None;
            }
            return Some((&content[..i], &content[i + 1..]));
        }
    }
    None
}

struct InlineDef {
    name: String,
    options: Vec<String>,
    line: usize,
}

fn scan_segments(
    body: &str,
    start_line: usize,
    defs: &mut Vec<InlineDef>,
) -> Result<Vec<Segment>, SpecError> {
    let mut segments = Vec::new();
    let mut text_start = 0;
    let mut cursor = 0;
    while let Some(rel) = body[cursor..].find("{{") {
        let open = cursor + rel;
        let Some(close) = find_close(body, open + 2) else {
            cursor = open + 2;
            continue;
        };
        let content = &body[open + 2..close];
        let trimmed = content.trim();
        let line = start_line + body[..open].matches('\n').count();
        let name = if is_ident(trimmed) {
            trimmed.to_owned()
        } else if let Some((lhs, rhs)) =
            definition_split(content).filter(|(lhs, _)| is_ident(lhs.trim()))
        {
            let name = lhs.trim().to_owned();
            let options: Vec<String> = split_top_level(rhs).into_iter().map(str::to_owned).collect();
            if name == UNIVERSE_PLACEHOLDER {
                return Err(SpecError::InvalidPlaceholder {
                    name,
                    line,
                    message: "`_n` is reserved for the universe id".into(),
                });
            }
            defs.push(InlineDef {
                name: name.clone(),
                options,
                line,
            });
            name
        } else {
            // Not placeholder syntax; leave the braces as source text.
            cursor = open + 2;
            continue;
        };
        if text_start < open {
            segments.push(Segment::Text(body[text_start..open].to_owned()));
        }
        segments.push(Segment::Placeholder {
            name,
            raw: body[open..close + 2].to_owned(),
            line,
        });
        cursor = close + 2;
        text_start = cursor;
    }
    if text_start < body.len() {
        segments.push(Segment::Text(body[text_start..].to_owned()));
    }
    Ok(segments)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    decisions: Vec<RawDecision>,
    #[serde(default)]
    constraints: Vec<serde_json::Map<String, Value>>,
    graph: Option<Vec<String>>,
    dataset: Option<String>,
    shuffle_column: Option<String>,
    language: Option<String>,
    interpreter: Option<String>,
    output_dir: Option<String>,
    sensitivity: Option<String>,
    before_execute: Option<String>,
    after_execute: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecision {
    #[serde(alias = "name")]
    var: String,
    options: Vec<Value>,
}

fn option_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Line of the first occurrence of `needle` in `body`, offset to the file.
fn locate(body: &str, body_line: usize, needle: &str) -> usize {
    body.find(needle)
        .map_or(body_line, |i| body_line + body[..i].matches('\n').count())
}

struct ConfigSection {
    raw: RawConfig,
    body: String,
    body_line: usize,
    line: usize,
}

impl ConfigSection {
    fn locate(&self, needle: &str) -> usize {
        locate(&self.body, self.body_line, needle).max(self.line)
    }

    fn locate_nth(&self, needle: &str, n: usize) -> usize {
        self.body
            .match_indices(needle)
            .nth(n)
            .map_or(self.line, |(i, _)| {
                self.body_line + self.body[..i].matches('\n').count()
            })
    }
}

/// Parses an annotated script into a validated [`MultiverseSpec`].
pub fn parse_spec(source: &str, filename: &str) -> Result<MultiverseSpec, SpecError> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut sections = Vec::new();
    let mut decisions: Vec<Decision> = Vec::new();
    let mut config: Option<ConfigSection> = None;
    let mut defs = Vec::new();

    let register = |decisions: &mut Vec<Decision>, d: Decision| -> Result<(), SpecError> {
        if d.name == UNIVERSE_PLACEHOLDER || decisions.iter().any(|e| e.name == d.name) {
            return Err(SpecError::DuplicateDecision {
                name: d.name,
                line: d.line,
            });
        }
        decisions.push(d);
        Ok(())
    };

    for raw in split_sections(source) {
        let (marker, name, label) = match raw.marker {
            Some((marker, name, label)) => (Some(marker), name, label),
            None => (None, IMPLICIT_BLOCK.to_owned(), None),
        };
        if name == CONFIG_BLOCK {
            if config.is_some() {
                return Err(SpecError::InvalidConfig {
                    line: raw.line,
                    message: "more than one config block".into(),
                });
            }
            let parsed: RawConfig =
                serde_json::from_str(&raw.body).map_err(|e| SpecError::MalformedConfig {
                    line: raw.body_line + e.line().saturating_sub(1),
                    message: e.to_string(),
                })?;
            let section = ConfigSection {
                raw: parsed,
                body: raw.body.clone(),
                body_line: raw.body_line,
                line: raw.line,
            };
            for d in &section.raw.decisions {
                let line = section.locate(&format!("\"{}\"", d.var));
                if !is_ident(&d.var) {
                    return Err(SpecError::InvalidPlaceholder {
                        name: d.var.clone(),
                        line,
                        message: "not a valid identifier".into(),
                    });
                }
                register(
                    &mut decisions,
                    Decision {
                        name: d.var.clone(),
                        kind: DecisionKind::Placeholder,
                        options: d.options.iter().map(option_text).collect(),
                        line,
                    },
                )?;
            }
            sections.push(Section::Config {
                marker: marker.unwrap_or_default(),
                body: raw.body,
            });
            config = Some(section);
            continue;
        }

        let first = defs.len();
        let segments = scan_segments(&raw.body, raw.body_line, &mut defs)?;
        let version = BlockVersion {
            label: label.clone(),
            marker,
            line: raw.line,
            segments,
        };
        let block_idx = match blocks.iter().position(|b| b.name == name) {
            None => {
                if label.is_some() {
                    register(
                        &mut decisions,
                        Decision {
                            name: name.clone(),
                            kind: DecisionKind::Block,
                            options: Vec::new(),
                            line: raw.line,
                        },
                    )?;
                }
                blocks.push(Block {
                    name: name.clone(),
                    versions: Vec::new(),
                });
                blocks.len() - 1
            }
            Some(i) => {
                let block = &blocks[i];
                match &label {
                    Some(l) if block.is_decision() => {
                        if block.version_index(l).is_some() {
                            return Err(SpecError::DuplicateVersion {
                                name,
                                label: l.clone(),
                                line: raw.line,
                            });
                        }
                    }
                    _ => {
                        return Err(SpecError::DuplicateBlock {
                            name,
                            line: raw.line,
                        })
                    }
                }
                i
            }
        };
        blocks[block_idx].versions.push(version);
        sections.push(Section::Code {
            block: block_idx,
            version: blocks[block_idx].versions.len() - 1,
        });
        for def in defs.drain(first..).collect::<Vec<_>>() {
            register(
                &mut decisions,
                Decision {
                    name: def.name,
                    kind: DecisionKind::Placeholder,
                    options: def.options,
                    line: def.line,
                },
            )?;
        }
    }

    for block in &blocks {
        if block.is_decision() {
            if block.versions.len() < 2 {
                return Err(SpecError::SingleVersionBlock {
                    name: block.name.clone(),
                    line: block.versions[0].line,
                });
            }
            let d = decisions
                .iter_mut()
                .find(|d| d.name == block.name)
                .expect("registered with its first version");
            d.options = block
                .versions
                .iter()
                .map(|v| v.label.clone().expect("decision block versions are labelled"))
                .collect();
        }
    }

    for d in &decisions {
        if d.kind == DecisionKind::Placeholder {
            validate_options(d)?;
        }
    }

    for block in &blocks {
        for version in &block.versions {
            for seg in &version.segments {
                if let Segment::Placeholder { name, line, .. } = seg {
                    if name == UNIVERSE_PLACEHOLDER {
                        continue;
                    }
                    match decisions.iter().find(|d| &d.name == name) {
                        Some(d) if d.kind == DecisionKind::Placeholder => {}
                        Some(_) => {
                            return Err(SpecError::InvalidPlaceholder {
                                name: name.clone(),
                                line: *line,
                                message: "names a decision block, not a placeholder".into(),
                            })
                        }
                        None => {
                            return Err(SpecError::UndefinedPlaceholder {
                                name: name.clone(),
                                line: *line,
                            })
                        }
                    }
                }
            }
        }
    }

    let mut constraints = Vec::new();
    let mut graph = None;
    let mut cfg = Config::default();
    if let Some(section) = &config {
        constraints = parse_constraints(section, &decisions)?;
        if let Some(edges) = &section.raw.graph {
            graph = Some(parse_graph(section, edges, &blocks)?);
        }
        let raw = &section.raw;
        cfg.interpreter = raw.interpreter.clone();
        cfg.output_dir = raw.output_dir.as_ref().map(PathBuf::from);
        cfg.dataset = raw.dataset.as_ref().map(PathBuf::from);
        cfg.shuffle_column = raw.shuffle_column.clone();
        cfg.before_execute = raw.before_execute.clone();
        cfg.after_execute = raw.after_execute.clone();
        if let Some(m) = &raw.sensitivity {
            cfg.sensitivity = m.parse().map_err(|message| SpecError::InvalidConfig {
                line: section.locate("\"sensitivity\""),
                message,
            })?;
        }
        if let Some(lang) = &raw.language {
            cfg.language = lang.clone();
        }
    }
    if cfg.language.is_empty() {
        cfg.language = language_for(filename)
            .ok_or_else(|| SpecError::UnknownLanguage {
                filename: filename.to_owned(),
                line: config.as_ref().map_or(1, |c| c.line),
            })?
            .to_owned();
    }

    let extension = Path::new(filename)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_owned();

    Ok(MultiverseSpec {
        filename: filename.to_owned(),
        extension,
        blocks,
        decisions,
        constraints,
        graph,
        config: cfg,
        sections,
    })
}

fn validate_options(d: &Decision) -> Result<(), SpecError> {
    let invalid = |message: String| SpecError::InvalidPlaceholder {
        name: d.name.clone(),
        line: d.line,
        message,
    };
    if d.options.len() < 2 {
        return Err(invalid("needs at least two options".into()));
    }
    if d.options.iter().any(|o| o.is_empty()) {
        return Err(invalid("empty option value".into()));
    }
    let distinct: BTreeSet<&String> = d.options.iter().collect();
    if distinct.len() != d.options.len() {
        return Err(invalid("option values must be distinct".into()));
    }
    Ok(())
}

fn option_matches(option: &str, wanted: &Value) -> bool {
    let text = option_text(wanted);
    let unquoted = option.trim_matches(|c| c == '"' || c == '\'');
    option == text
        || unquoted == text
        || match (option.trim().parse::<f64>(), wanted.as_f64()) {
            (Ok(a), Some(b)) => a == b,
            _ => false,
        }
}

fn parse_constraints(
    section: &ConfigSection,
    decisions: &[Decision],
) -> Result<Vec<Constraint>, SpecError> {
    let by_name: HashMap<&str, &Decision> = decisions.iter().map(|d| (d.name.as_str(), d)).collect();
    let mut out = Vec::new();
    let mut links_seen = 0;
    for (i, obj) in section.raw.constraints.iter().enumerate() {
        let line = match obj.get("condition") {
            Some(c) => section.locate(&c.to_string()),
            None if obj.contains_key("link") => {
                links_seen += 1;
                section.locate_nth("\"link\"", links_seen - 1)
            }
            None => section.line,
        };
        let err = |message: String| SpecError::InvalidConstraint { line, message };

        if let Some(link) = obj.get("link") {
            if obj.len() != 1 {
                return Err(err(format!("constraint {i}: a link takes no other keys")));
            }
            let members: Vec<String> = link
                .as_array()
                .ok_or_else(|| err("`link` must be a list of decision names".into()))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_owned)
                        .ok_or_else(|| err("`link` must be a list of decision names".into()))
                })
                .collect::<Result<_, _>>()?;
            if members.len() < 2 {
                return Err(err("a link needs at least two decisions".into()));
            }
            let mut seen = BTreeSet::new();
            let mut cardinality = None;
            for m in &members {
                let d = by_name
                    .get(m.as_str())
                    .ok_or_else(|| err(format!("unknown decision `{m}` in link")))?;
                if !seen.insert(m) {
                    return Err(err(format!("decision `{m}` is linked twice")));
                }
                match cardinality {
                    None => cardinality = Some(d.options.len()),
                    Some(k) if k != d.options.len() => {
                        return Err(err(format!(
                            "linked decisions must have equal option counts (`{m}` has {}, expected {k})",
                            d.options.len()
                        )))
                    }
                    _ => {}
                }
            }
            out.push(Constraint::Link { members, line });
            continue;
        }

        let mut target = None;
        let mut option = None;
        let mut index = None;
        let mut condition = None;
        for (key, value) in obj {
            match key.as_str() {
                "decision" | "block" | "variable" => {
                    target = Some(
                        value
                            .as_str()
                            .ok_or_else(|| err(format!("`{key}` must be a string")))?
                            .to_owned(),
                    )
                }
                "option" => option = Some(value.clone()),
                "index" => {
                    index = Some(
                        value
                            .as_u64()
                            .ok_or_else(|| err("`index` must be a non-negative integer".into()))?
                            as usize,
                    )
                }
                "condition" => {
                    condition = Some(
                        value
                            .as_str()
                            .ok_or_else(|| err("`condition` must be a string".into()))?
                            .to_owned(),
                    )
                }
                other => return Err(err(format!("unknown constraint key `{other}`"))),
            }
        }
        let target = target.ok_or_else(|| err(format!("constraint {i} names no decision")))?;
        let condition =
            condition.ok_or_else(|| err(format!("constraint on `{target}` has no condition")))?;
        let decision = by_name
            .get(target.as_str())
            .ok_or_else(|| err(format!("unknown decision `{target}`")))?;
        let option = match (option, index) {
            (Some(_), Some(_)) => return Err(err("give either `option` or `index`, not both".into())),
            (Some(v), None) => Some(
                decision
                    .options
                    .iter()
                    .position(|o| option_matches(o, &v))
                    .ok_or_else(|| err(format!("`{target}` has no option {v}")))?,
            ),
            (None, Some(k)) if k >= decision.options.len() => {
                return Err(err(format!("`{target}` has no option index {k}")))
            }
            (None, k) => k,
        };
        let expr = parse_constraint_expr(&condition)
            .map_err(|e| err(format!("in condition `{condition}`: {e}")))?;
        for name in expr.decisions() {
            if !by_name.contains_key(name.as_str()) {
                return Err(err(format!("condition refers to undeclared decision `{name}`")));
            }
        }
        out.push(Constraint::Procedural {
            target,
            option,
            condition: expr,
            line,
        });
    }
    Ok(out)
}

fn parse_graph(section: &ConfigSection, edges: &[String], blocks: &[Block]) -> Result<CodeGraph, SpecError> {
    let line = section.locate("\"graph\"");
    let mut graph = CodeGraph {
        nodes: Vec::new(),
        edges: Vec::new(),
        line,
    };
    for spec in edges {
        let line = section.locate(&format!("\"{spec}\""));
        let mut prev: Option<usize> = None;
        for part in spec.split("->") {
            let part = part.trim();
            let (block, version) = match part.split_once(':') {
                Some((b, v)) => (b.trim(), Some(v.trim().to_owned())),
                None => (part, None),
            };
            let Some(b) = blocks.iter().find(|b| b.name == block) else {
                return Err(SpecError::UnknownGraphBlock {
                    name: part.to_owned(),
                    line,
                });
            };
            if let Some(v) = &version {
                if !b.is_decision() || b.version_index(v).is_none() {
                    return Err(SpecError::UnknownGraphBlock {
                        name: part.to_owned(),
                        line,
                    });
                }
            }
            let node = GraphNode {
                block: block.to_owned(),
                version,
            };
            let idx = match graph.nodes.iter().position(|n| *n == node) {
                Some(i) => i,
                None => {
                    graph.nodes.push(node);
                    graph.nodes.len() - 1
                }
            };
            if let Some(p) = prev {
                if p == idx {
                    return Err(SpecError::CyclicGraph {
                        node: part.to_owned(),
                        line,
                    });
                }
                if !graph.edges.contains(&(p, idx)) {
                    graph.edges.push((p, idx));
                }
            }
            prev = Some(idx);
        }
    }
    if graph.nodes.is_empty() {
        return Err(SpecError::InvalidGraph {
            line,
            message: "graph has no nodes".into(),
        });
    }
    crate::graph::check_acyclic(&graph).map_err(|node| SpecError::CyclicGraph {
        node: graph.nodes[node].to_string(),
        line,
    })?;
    let sources = graph.sources();
    if sources.len() != 1 {
        let names: Vec<String> = sources.iter().map(|&s| graph.nodes[s].to_string()).collect();
        return Err(SpecError::InvalidGraph {
            line,
            message: format!("expected exactly one source block, found {}", names.join(", ")),
        });
    }
    for b in blocks {
        if b.name != IMPLICIT_BLOCK && !graph.contains_block(&b.name) {
            return Err(SpecError::InvalidGraph {
                line,
                message: format!("block `{}` is not part of the graph", b.name),
            });
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn no_markers_single_implicit_block() {
        let src = "x <- 1\nprint(x)\n";
        let spec = parse_spec(src, "a.R").unwrap();
        assert_eq!(spec.blocks.len(), 1);
        assert_eq!(spec.blocks[0].name, IMPLICIT_BLOCK);
        assert!(spec.decisions.is_empty());
        assert_eq!(spec.config.language, "R");
        assert_eq!(spec.to_source(), src);
    }

    #[test]
    fn decision_block_with_scoped_placeholder() {
        let src = "\
import pandas as pd
# --- (M) bayesian
fit = brm(y ~ x, family={{brm_family = 'gaussian', 'lognormal'}})
# --- (M) frequentist
fit = lm(y ~ x)
# --- (A)
print(fit)
";
        let spec = parse_spec(src, "model.py").unwrap();
        assert_eq!(spec.decisions.len(), 2);
        assert_eq!(spec.decisions[0].name, "M");
        assert_eq!(spec.decisions[0].kind, DecisionKind::Block);
        assert_eq!(spec.decisions[0].options, vec!["bayesian", "frequentist"]);
        assert_eq!(spec.decisions[1].name, "brm_family");
        assert_eq!(spec.decisions[1].options, vec!["'gaussian'", "'lognormal'"]);
        assert_eq!(spec.blocks.iter().filter(|b| b.is_decision()).count(), 1);
        assert_eq!(spec.config.language, "python");
        assert_eq!(spec.to_source(), src);
    }

    #[test]
    fn inline_numeric_definition() {
        let src = "df = df[df.x < {{cutoff = 2, 2.5, 3}}]\n";
        let spec = parse_spec(src, "a.py").unwrap();
        let d = &spec.decisions[0];
        assert_eq!(d.name, "cutoff");
        assert_eq!(d.kind, DecisionKind::Placeholder);
        assert_eq!(d.options, vec!["2", "2.5", "3"]);
        assert_eq!(spec.to_source(), src);
    }

    #[test]
    fn top_level_splitting_respects_nesting() {
        assert_eq!(
            split_top_level(r#" c(1, 2), "a, b", [3, {4, 5}] "#),
            vec!["c(1, 2)", r#""a, b""#, "[3, {4, 5}]"]
        );
    }

    #[test]
    fn config_block_decisions_constraints_graph() {
        let src = r#"# --- (BOBA_CONFIG)
{
  "decisions": [{"var": "k", "options": [1, 2, "three"]}],
  "constraints": [
    {"decision": "k", "option": "three", "condition": "M == \"b\""},
    {"link": ["M", "z"]}
  ],
  "graph": ["A -> M:a -> C", "A -> M:b -> C"],
  "dataset": "data.csv",
  "shuffle_column": "treatment",
  "sensitivity": "f"
}
# --- (A)
x = {{k}}
# --- (M) a
y = {{z = 1, 2}}
# --- (M) b
y = 0
# --- (C)
print(x)
"#;
        let spec = parse_spec(src, "s.py").unwrap();
        let names: Vec<_> = spec.decisions.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["k", "M", "z"]);
        assert_eq!(spec.decision("k").unwrap().options, ["1", "2", "three"]);
        assert_eq!(spec.decision("k").unwrap().line, 3);
        assert_eq!(spec.constraints.len(), 2);
        match &spec.constraints[0] {
            Constraint::Procedural { target, option, condition, line } => {
                assert_eq!(target, "k");
                assert_eq!(*option, Some(2));
                assert!(matches!(condition, Expr::Compare { .. }));
                assert_eq!(*line, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&spec.constraints[1], Constraint::Link { members, .. } if members == &["M", "z"]));
        let g = spec.graph.as_ref().unwrap();
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(spec.config.shuffle_column.as_deref(), Some("treatment"));
        assert_eq!(spec.config.sensitivity, crate::SensitivityMethod::F);
        assert_eq!(spec.to_source(), src);
    }

    fn err(src: &str) -> SpecError {
        parse_spec(src, "x.py").unwrap_err()
    }

    #[test]
    fn duplicate_decision_names() {
        let e = err("a = {{x = 1, 2}}\nb = {{x = 3, 4}}\n");
        assert_eq!(e, SpecError::DuplicateDecision { name: "x".into(), line: 2 });
        let e = err("# --- (x) a\n1\n# --- (x) b\n2\n# --- (B)\n{{x = 1, 2}}\n");
        assert_eq!(e.code(), "duplicate-decision");
        assert_eq!(e.line(), 6);
    }

    #[test]
    fn undefined_placeholder() {
        let e = err("a = 1\nb = {{missing}}\n");
        assert_eq!(e, SpecError::UndefinedPlaceholder { name: "missing".into(), line: 2 });
    }

    #[test]
    fn malformed_config_reports_json_line() {
        let e = err("x = 1\n# --- (BOBA_CONFIG)\n{\n  \"graph\": [\n}\n");
        assert_eq!(e.code(), "malformed-config");
        assert_eq!(e.line(), 5);
        let e = err("# --- (BOBA_CONFIG)\n{\"bogus\": 1}\n");
        assert_eq!(e.code(), "malformed-config");
    }

    #[test]
    fn single_version_decision_block() {
        let e = err("# --- (M) only\nx\n");
        assert_eq!(e, SpecError::SingleVersionBlock { name: "M".into(), line: 1 });
    }

    #[test]
    fn duplicate_blocks_and_versions() {
        assert_eq!(err("# --- (A)\n1\n# --- (A)\n2\n").code(), "duplicate-block");
        assert_eq!(err("# --- (M) a\n1\n# --- (M) a\n2\n").code(), "duplicate-version");
        assert_eq!(err("# --- (A)\n1\n# --- (A) v\n2\n").code(), "duplicate-block");
    }

    #[test]
    fn cyclic_graph() {
        let src = "# --- (BOBA_CONFIG)\n{\"graph\": [\"A -> B -> C\", \"C -> B\"]}\n# --- (A)\n# --- (B)\n# --- (C)\n";
        let e = err(src);
        assert_eq!(e.code(), "cyclic-graph");
        assert_eq!(e.line(), 2);
    }

    #[test]
    fn unknown_graph_block() {
        let src = "# --- (BOBA_CONFIG)\n{\"graph\": [\"A -> Z\"]}\n# --- (A)\nx\n";
        assert_eq!(err(src), SpecError::UnknownGraphBlock { name: "Z".into(), line: 2 });
        let src = "# --- (BOBA_CONFIG)\n{\"graph\": [\"A -> A:v\"]}\n# --- (A)\nx\n";
        assert_eq!(err(src).code(), "unknown-graph-block");
    }

    #[test]
    fn graph_needs_unique_source_and_full_coverage() {
        let src = "# --- (BOBA_CONFIG)\n{\"graph\": [\"A -> C\", \"B -> C\"]}\n# --- (A)\n# --- (B)\n# --- (C)\n";
        assert_eq!(err(src).code(), "invalid-graph");
        let src = "# --- (BOBA_CONFIG)\n{\"graph\": [\"A -> B\"]}\n# --- (A)\n# --- (B)\n# --- (C)\n";
        assert!(err(src).to_string().contains("`C`"));
    }

    #[test]
    fn constraint_errors() {
        let base = |c: &str| format!("x = {{{{a = 1, 2}}}}\n# --- (BOBA_CONFIG)\n{{\"constraints\": [{c}]}}\n");
        assert_eq!(err(&base(r#"{"decision": "q", "condition": "a == 1"}"#)).code(), "invalid-constraint");
        assert_eq!(err(&base(r#"{"decision": "a", "condition": "b == 1"}"#)).code(), "invalid-constraint");
        assert_eq!(err(&base(r#"{"decision": "a", "condition": "a = 1"}"#)).code(), "invalid-constraint");
        assert_eq!(err(&base(r#"{"decision": "a", "option": 7, "condition": "a == 1"}"#)).code(), "invalid-constraint");
        assert_eq!(err(&base(r#"{"link": ["a"]}"#)).code(), "invalid-constraint");
        let e = err(&base(r#"{"decision": "a", "condition": "a =="}"#));
        assert_eq!(e.line(), 3);
    }

    #[test]
    fn link_cardinality_mismatch() {
        let src = "x = {{a = 1, 2}} {{b = 1, 2, 3}}\n# --- (BOBA_CONFIG)\n{\"constraints\": [{\"link\": [\"a\", \"b\"]}]}\n";
        assert!(err(src).to_string().contains("equal option counts"));
    }

    #[test]
    fn language_inference() {
        assert_eq!(parse_spec("echo hi\n", "x.txt").unwrap_err().code(), "unknown-language");
        let spec = parse_spec("echo hi\n# --- (BOBA_CONFIG)\n{\"language\": \"shell\"}\n", "a.sh").unwrap();
        assert_eq!(spec.config.language, "shell");
        assert_eq!(spec.config.interpreter_command(), "sh");
        assert_eq!(spec.extension, "sh");
        assert_eq!(parse_spec("1\n", "a.r").unwrap().config.interpreter_command(), "Rscript");
    }

    #[test]
    fn non_placeholder_braces_are_text() {
        let src = "s = f\"{{ 1 + 2 }}\" # {{\nt = '{{x}}'\n";
        let e = err(src);
        assert_eq!(e, SpecError::UndefinedPlaceholder { name: "x".into(), line: 2 });
        let src = "s = f\"{{ 1 + 2 }}\" # {{\n";
        let spec = parse_spec(src, "a.py").unwrap();
        assert!(spec.decisions.is_empty());
        assert_eq!(spec.to_source(), src);
    }

    #[test]
    fn reserved_universe_placeholder() {
        let spec = parse_spec("out = 'estimate_{{_n}}.csv'\n", "a.py").unwrap();
        assert!(spec.decisions.is_empty());
        assert_eq!(err("{{_n = 1, 2}}\n").code(), "invalid-placeholder");
    }

    #[test]
    fn marker_recognition() {
        assert_eq!(parse_marker("# --- (A)\n"), Some(("A".into(), None)));
        assert_eq!(parse_marker("# --- (M) lm\r\n"), Some(("M".into(), Some("lm".into()))));
        assert_eq!(parse_marker("# ------- notes"), None);
        assert_eq!(parse_marker("#--- (A)"), None);
        assert_eq!(parse_marker("# --- (A) two words"), None);
    }
}
