//! In-memory form of a parsed multiverse specification.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;

/// Name given to the code that precedes the first block marker.
pub const IMPLICIT_BLOCK: &str = "_start";
/// Marker name of the block holding the JSON config.
pub const CONFIG_BLOCK: &str = "BOBA_CONFIG";
/// Built-in placeholder that expands to the universe id.
pub const UNIVERSE_PLACEHOLDER: &str = "_n";

/// A piece of block text: either literal source or a placeholder occurrence.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Text(String),
    Placeholder {
        name: String,
        /// The exact source text, `{{ ... }}` included.
        raw: String,
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVersion {
    /// `None` for normal blocks.
    pub label: Option<String>,
    /// Raw marker line (terminator included); `None` for the implicit leading block.
    pub marker: Option<String>,
    pub line: usize,
    pub segments: Vec<Segment>,
}

impl BlockVersion {
    /// Placeholder names used in this version, in order of appearance.
    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Placeholder { name, .. } => Some(name.as_str()),
            Segment::Text(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub versions: Vec<BlockVersion>,
}

impl Block {
    pub fn is_decision(&self) -> bool {
        self.versions.first().is_some_and(|v| v.label.is_some())
    }

    pub fn version(&self, label: Option<&str>) -> Option<&BlockVersion> {
        self.versions.iter().find(|v| v.label.as_deref() == label)
    }

    pub fn version_index(&self, label: &str) -> Option<usize> {
        self.versions
            .iter()
            .position(|v| v.label.as_deref() == Some(label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionKind {
    Placeholder,
    Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub name: String,
    pub kind: DecisionKind,
    /// Raw option text for placeholders, version labels for blocks.
    pub options: Vec<String>,
    /// Line where the decision is declared.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// The target decision (or one of its options) only exists when `condition` holds.
    Procedural {
        target: String,
        option: Option<usize>,
        condition: Expr,
        line: usize,
    },
    /// The i-th options of all members are chosen together.
    Link { members: Vec<String>, line: usize },
}

impl Constraint {
    pub fn line(&self) -> usize {
        match self {
            Constraint::Procedural { line, .. } | Constraint::Link { line, .. } => *line,
        }
    }
}

/// A node of the code graph: a block, or one version of a decision block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphNode {
    pub block: String,
    pub version: Option<String>,
}

impl fmt::Display for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.version {
            Some(v) => write!(f, "{}:{}", self.block, v),
            None => write!(f, "{}", self.block),
        }
    }
}

/// Execution-order DAG over blocks. Edges index into `nodes`; child order is
/// the order edges were declared.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize)>,
    pub line: usize,
}

impl CodeGraph {
    pub fn children(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(a, _)| *a == node)
            .map(|&(_, b)| b)
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&n| !self.edges.iter().any(|&(_, b)| b == n))
            .collect()
    }

    pub fn contains_block(&self, block: &str) -> bool {
        self.nodes.iter().any(|n| n.block == block)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityMethod {
    #[default]
    Ks,
    F,
}

impl std::str::FromStr for SensitivityMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ks" => Ok(SensitivityMethod::Ks),
            "f" => Ok(SensitivityMethod::F),
            other => Err(format!("unknown sensitivity method `{other}` (expected ks or f)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub language: String,
    /// Command used to execute universe scripts; derived from the language when unset.
    pub interpreter: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub shuffle_column: Option<String>,
    pub sensitivity: SensitivityMethod,
    pub before_execute: Option<String>,
    pub after_execute: Option<String>,
}

impl Config {
    /// Applies a `key=value` override as accepted by the command line.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), String> {
        let opt = |v: &str| (!v.is_empty()).then(|| v.to_owned());
        match key {
            "language" => self.language = value.to_owned(),
            "interpreter" => self.interpreter = opt(value),
            "output_dir" => self.output_dir = opt(value).map(PathBuf::from),
            "dataset" => self.dataset = opt(value).map(PathBuf::from),
            "shuffle_column" => self.shuffle_column = opt(value),
            "sensitivity" => self.sensitivity = value.parse()?,
            "before_execute" => self.before_execute = opt(value),
            "after_execute" => self.after_execute = opt(value),
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    /// The interpreter command for universe scripts.
    pub fn interpreter_command(&self) -> String {
        if let Some(cmd) = &self.interpreter {
            return cmd.clone();
        }
        match self.language.to_ascii_lowercase().as_str() {
            "python" => "python3".into(),
            "r" => "Rscript".into(),
            "shell" | "sh" => "sh".into(),
            "bash" => "bash".into(),
            other => other.into(),
        }
    }
}

/// Position of a file section, used to re-serialize the source.
#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Code { block: usize, version: usize },
    Config { marker: String, body: String },
}

/// A parsed, validated multiverse specification.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiverseSpec {
    pub filename: String,
    /// Extension of the input file (without the dot); reused for universe scripts.
    pub extension: String,
    /// Code blocks in file order.
    pub blocks: Vec<Block>,
    /// Decisions in declaration order.
    pub decisions: Vec<Decision>,
    pub constraints: Vec<Constraint>,
    pub graph: Option<CodeGraph>,
    pub config: Config,
    pub sections: Vec<Section>,
}

impl MultiverseSpec {
    pub fn decision(&self, name: &str) -> Option<&Decision> {
        self.decisions.iter().find(|d| d.name == name)
    }

    pub fn decision_index(&self, name: &str) -> Option<usize> {
        self.decisions.iter().position(|d| d.name == name)
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// All segments with their owning block and version label.
    pub fn segments(&self) -> impl Iterator<Item = (&str, Option<&str>, &Segment)> {
        self.blocks.iter().flat_map(|b| {
            b.versions.iter().flat_map(move |v| {
                v.segments
                    .iter()
                    .map(move |s| (b.name.as_str(), v.label.as_deref(), s))
            })
        })
    }

    /// Reproduces the annotated source byte for byte.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            match section {
                Section::Code { block, version } => {
                    let v = &self.blocks[*block].versions[*version];
                    if let Some(m) = &v.marker {
                        out.push_str(m);
                    }
                    for s in &v.segments {
                        match s {
                            Segment::Text(t) => out.push_str(t),
                            Segment::Placeholder { raw, .. } => out.push_str(raw),
                        }
                    }
                }
                Section::Config { marker, body } => {
                    out.push_str(marker);
                    out.push_str(body);
                }
            }
        }
        out
    }
}
