//! Compiler for annotated multiverse analysis scripts.
//!
//! An annotated script marks decision points (placeholders and alternative
//! code blocks) plus constraints between them. This crate parses such a script,
//! enumerates every compatible combination of choices ("universes") and
//! synthesizes one standalone script per universe.

pub mod decision_graph;
pub mod enumerate;
pub mod error;
pub mod expr;
pub mod graph;
pub mod parse;
pub mod spec;
pub mod summary;
pub mod synth;

use std::path::{Path, PathBuf};

pub use decision_graph::{DecisionGraph, DecisionNode, Edge};
pub use enumerate::{enumerate, enumerate_with_warnings, Choice, Enumeration, Universe, Warning};
pub use error::{EnumerateError, SpecError, SynthError};
pub use expr::{parse_constraint_expr, Expr, ExprError};
pub use graph::enumerate_paths;
pub use parse::parse_spec;
pub use spec::{
    Block, BlockVersion, CodeGraph, Config, Constraint, Decision, DecisionKind, GraphNode,
    MultiverseSpec, Section, Segment, SensitivityMethod,
};
pub use summary::{build_summary, DecisionColumn, SummaryRow, SummaryTable};
pub use synth::{synthesize, write_universes, Manifest, ManifestEntry, Overview};

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config override `{0}`")]
    Override(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl CompileError {
    pub fn code(&self) -> &'static str {
        match self {
            CompileError::Read { .. } => "io",
            CompileError::Override(_) => "config-override",
            CompileError::Spec(e) => e.code(),
            CompileError::Enumerate(EnumerateError::EmptyMultiverse) => "empty-multiverse",
            CompileError::Enumerate(EnumerateError::Graph(_)) => "invalid-graph",
            CompileError::Synth(_) => "synthesis",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// `key=value` config overrides, applied after parsing.
    pub overrides: Vec<(String, String)>,
    pub force: bool,
}

#[derive(Debug)]
pub struct CompileOutput {
    pub spec: MultiverseSpec,
    pub universes: Vec<Universe>,
    pub warnings: Vec<Warning>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

/// Reads, parses, enumerates and writes a spec file in one go.
///
/// A relative dataset path is resolved against the spec file's directory.
/// `out_dir` falls back to the config's `output_dir`, then to `multiverse/`
/// next to the spec file.
pub fn compile_file(
    spec_file: &Path,
    out_dir: Option<&Path>,
    opts: &CompileOptions,
) -> Result<CompileOutput, CompileError> {
    let source = std::fs::read_to_string(spec_file).map_err(|source| CompileError::Read {
        path: spec_file.to_owned(),
        source,
    })?;
    let filename = spec_file
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut spec = parse_spec(&source, &filename)?;
    for (k, v) in &opts.overrides {
        spec.config
            .apply_override(k, v)
            .map_err(|e| CompileError::Override(format!("{k}={v}: {e}")))?;
    }
    let base = spec_file.parent().unwrap_or(Path::new("."));
    let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_owned());
    if let Some(ds) = &spec.config.dataset {
        if ds.is_relative() {
            spec.config.dataset = Some(base.join(ds));
        }
    }
    let out_dir = match (out_dir, &spec.config.output_dir) {
        (Some(d), _) => d.to_owned(),
        (None, Some(d)) if d.is_relative() => base.join(d),
        (None, Some(d)) => d.clone(),
        (None, None) => base.join("multiverse"),
    };
    let Enumeration {
        universes,
        warnings,
    } = enumerate_with_warnings(&spec)?;
    let manifest = write_universes(&spec, &universes, &out_dir, opts.force)?;
    Ok(CompileOutput {
        spec,
        universes,
        warnings,
        manifest,
        out_dir,
    })
}
