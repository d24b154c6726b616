//! Materializes universes as standalone scripts plus the artifacts the runner
//! and server read back (`summary.csv`, `overview.json`, `manifest.json`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decision_graph::DecisionGraph;
use crate::enumerate::Universe;
use crate::error::SynthError;
use crate::spec::{Constraint, MultiverseSpec, SensitivityMethod, Segment, UNIVERSE_PLACEHOLDER};
use crate::summary::build_summary;

pub const CODE_DIR: &str = "code";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const OVERVIEW_FILE: &str = "overview.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Produces the script text of one universe.
pub fn synthesize(spec: &MultiverseSpec, universe: &Universe) -> Result<String, SynthError> {
    let mut out = String::new();
    for (block_name, label) in &universe.block_path {
        let version = spec
            .block(block_name)
            .and_then(|b| b.version(label.as_deref()))
            .ok_or_else(|| SynthError::UnknownVersion {
                block: block_name.clone(),
                label: label.clone().unwrap_or_default(),
                uid: universe.id,
            })?;
        for seg in &version.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Placeholder { name, .. } if name == UNIVERSE_PLACEHOLDER => {
                    out.push_str(&universe.id.to_string())
                }
                Segment::Placeholder { name, .. } => {
                    let value = match universe.assignment.get(name) {
                        Some(c) => c.value.as_str(),
                        // Switched off by a decision-level constraint but still in the text.
                        None if deactivatable(spec, name) => spec
                            .decision(name)
                            .map(|d| d.options[0].as_str())
                            .unwrap_or_default(),
                        None => {
                            return Err(SynthError::UnresolvedPlaceholder {
                                name: name.clone(),
                                uid: universe.id,
                            })
                        }
                    };
                    out.push_str(value);
                }
            }
        }
    }
    Ok(out)
}

fn deactivatable(spec: &MultiverseSpec, name: &str) -> bool {
    spec.constraints.iter().any(|c| {
        matches!(c, Constraint::Procedural { target, option: None, .. } if target == name)
    })
}

/// Width used to zero-pad universe ids in file names.
pub fn id_width(max_id: usize) -> usize {
    max_id.max(1).to_string().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub uid: usize,
    /// Relative to the output directory.
    pub script: PathBuf,
}

/// Everything the runner needs to execute a compiled multiverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub language: String,
    pub interpreter: String,
    pub extension: String,
    pub id_width: usize,
    pub universes: Vec<ManifestEntry>,
    pub dataset: Option<PathBuf>,
    pub shuffle_column: Option<String>,
    pub before_execute: Option<String>,
    pub after_execute: Option<String>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Result<Self, SynthError> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| SynthError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn padded(&self, uid: usize) -> String {
        format!("{uid:0width$}", width = self.id_width)
    }
}

/// Decision structure handed to the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overview {
    #[serde(flatten)]
    pub graph: DecisionGraph,
    pub sensitivity_method: SensitivityMethod,
    pub universe_count: usize,
}

impl Overview {
    pub fn load(out_dir: &Path) -> Result<Self, SynthError> {
        let path = out_dir.join(OVERVIEW_FILE);
        let text = fs::read_to_string(&path).map_err(|e| SynthError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn is_empty_dir(dir: &Path) -> Result<bool, SynthError> {
    match fs::read_dir(dir) {
        Ok(mut it) => Ok(it.next().is_none()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(true),
        Err(e) => Err(SynthError::io(dir, e)),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), SynthError> {
    fs::write(path, contents).map_err(|e| SynthError::io(path, e))
}

/// Writes `code/universe_<id>.<ext>` for every universe plus `summary.csv`,
/// `overview.json` and `manifest.json`.
///
/// A non-empty `out_dir` is only overwritten when `force` is set; the old
/// `code/` directory is then replaced wholesale.
pub fn write_universes(
    spec: &MultiverseSpec,
    universes: &[Universe],
    out_dir: &Path,
    force: bool,
) -> Result<Manifest, SynthError> {
    if !is_empty_dir(out_dir)? {
        if !force {
            return Err(SynthError::OutputNotEmpty(out_dir.display().to_string()));
        }
        let code = out_dir.join(CODE_DIR);
        if code.exists() {
            fs::remove_dir_all(&code).map_err(|e| SynthError::io(&code, e))?;
        }
    }
    let code = out_dir.join(CODE_DIR);
    fs::create_dir_all(&code).map_err(|e| SynthError::io(&code, e))?;

    let width = id_width(universes.iter().map(|u| u.id).max().unwrap_or(1));
    let mut entries = Vec::with_capacity(universes.len());
    for u in universes {
        let mut name = format!("universe_{:0width$}", u.id);
        if !spec.extension.is_empty() {
            name.push('.');
            name.push_str(&spec.extension);
        }
        let rel = Path::new(CODE_DIR).join(name);
        write(&out_dir.join(&rel), synthesize(spec, u)?)?;
        entries.push(ManifestEntry { uid: u.id, script: rel });
    }

    let mut summary = Vec::new();
    build_summary(spec, universes).write_csv(&mut summary)?;
    write(&out_dir.join(SUMMARY_FILE), summary)?;

    let overview = Overview {
        graph: DecisionGraph::from_spec(spec),
        sensitivity_method: spec.config.sensitivity,
        universe_count: universes.len(),
    };
    write(&out_dir.join(OVERVIEW_FILE), serde_json::to_vec_pretty(&overview)?)?;

    let manifest = Manifest {
        language: spec.config.language.clone(),
        interpreter: spec.config.interpreter_command(),
        extension: spec.extension.clone(),
        id_width: width,
        universes: entries,
        dataset: spec.config.dataset.clone(),
        shuffle_column: spec.config.shuffle_column.clone(),
        before_execute: spec.config.before_execute.clone(),
        after_execute: spec.config.after_execute.clone(),
    };
    write(&out_dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
