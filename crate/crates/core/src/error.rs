use thiserror::Error;

/// Diagnostics raised while parsing or validating an annotated script.
///
/// Every variant carries the 1-based line of the source it refers to.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("line {line}: duplicate decision name `{name}`")]
    DuplicateDecision { name: String, line: usize },
    #[error("line {line}: placeholder `{name}` is used but never defined")]
    UndefinedPlaceholder { name: String, line: usize },
    #[error("line {line}: invalid placeholder `{name}`: {message}")]
    InvalidPlaceholder {
        name: String,
        line: usize,
        message: String,
    },
    #[error("line {line}: malformed config JSON: {message}")]
    MalformedConfig { line: usize, message: String },
    #[error("line {line}: invalid config: {message}")]
    InvalidConfig { line: usize, message: String },
    #[error("line {line}: decision block `{name}` needs at least two versions")]
    SingleVersionBlock { name: String, line: usize },
    #[error("line {line}: duplicate block `{name}`")]
    DuplicateBlock { name: String, line: usize },
    #[error("line {line}: decision block `{name}` repeats version `{label}`")]
    DuplicateVersion {
        name: String,
        label: String,
        line: usize,
    },
    #[error("line {line}: code graph contains a cycle through `{node}`")]
    CyclicGraph { node: String, line: usize },
    #[error("line {line}: code graph refers to unknown block `{name}`")]
    UnknownGraphBlock { name: String, line: usize },
    #[error("line {line}: invalid code graph: {message}")]
    InvalidGraph { line: usize, message: String },
    #[error("line {line}: invalid constraint: {message}")]
    InvalidConstraint { line: usize, message: String },
    #[error("line {line}: cannot infer the script language of `{filename}`; set `language` in the config block")]
    UnknownLanguage { filename: String, line: usize },
}

impl SpecError {
    pub fn line(&self) -> usize {
        match self {
            SpecError::DuplicateDecision { line, .. }
            | SpecError::UndefinedPlaceholder { line, .. }
            | SpecError::InvalidPlaceholder { line, .. }
            | SpecError::MalformedConfig { line, .. }
            | SpecError::InvalidConfig { line, .. }
            | SpecError::SingleVersionBlock { line, .. }
            | SpecError::DuplicateBlock { line, .. }
            | SpecError::DuplicateVersion { line, .. }
            | SpecError::CyclicGraph { line, .. }
            | SpecError::UnknownGraphBlock { line, .. }
            | SpecError::InvalidGraph { line, .. }
            | SpecError::InvalidConstraint { line, .. }
            | SpecError::UnknownLanguage { line, .. } => *line,
        }
    }

    /// Stable machine-readable identifier for the diagnostic kind.
    pub fn code(&self) -> &'static str {
        match self {
            SpecError::DuplicateDecision { .. } => "duplicate-decision",
            SpecError::UndefinedPlaceholder { .. } => "undefined-placeholder",
            SpecError::InvalidPlaceholder { .. } => "invalid-placeholder",
            SpecError::MalformedConfig { .. } => "malformed-config",
            SpecError::InvalidConfig { .. } => "invalid-config",
            SpecError::SingleVersionBlock { .. } => "single-version-block",
            SpecError::DuplicateBlock { .. } => "duplicate-block",
            SpecError::DuplicateVersion { .. } => "duplicate-version",
            SpecError::CyclicGraph { .. } => "cyclic-graph",
            SpecError::UnknownGraphBlock { .. } => "unknown-graph-block",
            SpecError::InvalidGraph { .. } => "invalid-graph",
            SpecError::InvalidConstraint { .. } => "invalid-constraint",
            SpecError::UnknownLanguage { .. } => "unknown-language",
        }
    }
}

/// Failures when expanding a spec into universes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnumerateError {
    #[error("empty multiverse: every combination of decisions is excluded by the constraints")]
    EmptyMultiverse,
    #[error("invalid code graph: {0}")]
    Graph(String),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("universe {uid}: placeholder `{name}` has no assigned value")]
    UnresolvedPlaceholder { name: String, uid: usize },
    #[error("universe {uid}: block `{block}` has no version `{label}`")]
    UnknownVersion {
        block: String,
        label: String,
        uid: usize,
    },
    #[error("output directory {0} is not empty; pass --force to overwrite")]
    OutputNotEmpty(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SynthError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SynthError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
