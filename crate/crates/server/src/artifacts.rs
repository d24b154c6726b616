//! Everything the API serves, read once from an output directory at startup.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use multiverse_core::summary::SummaryError;
use multiverse_core::synth::{OVERVIEW_FILE, SUMMARY_FILE};
use multiverse_core::{DecisionColumn, Overview, SummaryTable};
use multiverse_runner::{load_null, load_results, read_draws, read_lpd, read_predictions, ResultRow, Status, RESULTS_FILE};

use crate::ServerError;

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub out_dir: PathBuf,
    pub overview: Overview,
    pub summary: SummaryTable,
    pub results: Vec<ResultRow>,
    pub draws: BTreeMap<usize, Vec<f64>>,
    pub predictions: BTreeMap<usize, Vec<(f64, f64)>>,
    pub lpd: BTreeMap<usize, Vec<f64>>,
    /// `(shuffle, uid, estimate)` from a permutation run, if one was made.
    pub null: Option<Vec<(usize, usize, f64)>>,
    /// Sidecar files that were present but unreadable.
    pub warnings: Vec<String>,
}

impl Artifacts {
    /// Loads `results.csv`, `summary.csv`, `overview.json` and any sidecars.
    /// All missing required files are reported together.
    pub fn load(out_dir: &Path) -> Result<Self, ServerError> {
        let missing: Vec<String> = [RESULTS_FILE, SUMMARY_FILE, OVERVIEW_FILE]
            .into_iter()
            .filter(|f| !out_dir.join(f).is_file())
            .map(str::to_owned)
            .collect();
        if !missing.is_empty() {
            return Err(ServerError::MissingArtifacts {
                dir: out_dir.to_owned(),
                files: missing,
            });
        }
        let overview = Overview::load(out_dir)?;
        let summary = read_summary(&out_dir.join(SUMMARY_FILE), &overview)?;
        let results = load_results(out_dir)?;
        if let Some(r) = results.iter().find(|r| summary.row(r.uid).is_none()) {
            return Err(ServerError::Malformed(format!(
                "universe {} is in {RESULTS_FILE} but not in {SUMMARY_FILE}",
                r.uid
            )));
        }

        let output = out_dir.join(multiverse_runner::OUTPUT_DIR);
        let mut warnings = Vec::new();
        let mut draws = BTreeMap::new();
        let mut predictions = BTreeMap::new();
        let mut lpd = BTreeMap::new();
        for r in results.iter().filter(|r| r.status == Status::Ok) {
            if let Some(d) = keep(&mut warnings, read_draws(&output, r.uid)) {
                draws.insert(r.uid, d);
            }
            if let Some(p) = keep(&mut warnings, read_predictions(&output, r.uid)) {
                predictions.insert(r.uid, p);
            }
            if let Some(l) = keep(&mut warnings, read_lpd(&output, r.uid)) {
                lpd.insert(r.uid, l);
            }
        }
        Ok(Artifacts {
            out_dir: out_dir.to_owned(),
            null: load_null(out_dir)?,
            overview,
            summary,
            results,
            draws,
            predictions,
            lpd,
            warnings,
        })
    }

    pub fn result(&self, uid: usize) -> Option<&ResultRow> {
        self.results.iter().find(|r| r.uid == uid)
    }

    /// Point estimates of the universes that ran successfully.
    pub fn estimates(&self) -> BTreeMap<usize, f64> {
        self.results
            .iter()
            .filter(|r| r.status == Status::Ok)
            .filter_map(|r| Some((r.uid, r.estimate_value()?)))
            .collect()
    }

    /// Fit metric of every successful universe, `None` where it is missing.
    pub fn fits(&self) -> Vec<(usize, Option<f64>)> {
        self.results
            .iter()
            .filter(|r| r.status == Status::Ok)
            .map(|r| (r.uid, r.fit_value()))
            .collect()
    }

    /// Decision name to chosen option for the decisions active in `uid`.
    pub fn choices(&self, uid: usize) -> BTreeMap<String, String> {
        let Some(row) = self.summary.row(uid) else {
            return BTreeMap::new();
        };
        (0..self.summary.decisions.len())
            .filter_map(|c| Some((self.summary.decisions[c].name.clone(), self.summary.value(row, c)?.to_owned())))
            .collect()
    }
}

fn keep<T>(warnings: &mut Vec<String>, res: Result<Option<T>, String>) -> Option<T> {
    res.unwrap_or_else(|msg| {
        warnings.push(msg);
        None
    })
}

/// The summary header lists decisions in declaration order while the overview
/// lists them in first-use order, so columns are matched by name.
fn read_summary(path: &Path, overview: &Overview) -> Result<SummaryTable, ServerError> {
    let wrap = |source| ServerError::Summary {
        path: path.to_owned(),
        source,
    };
    let text = fs::read_to_string(path).map_err(|e| ServerError::Malformed(format!("{}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| wrap(SummaryError::Csv(e)))?.clone();
    let mut columns = Vec::new();
    for name in header.iter().skip(1) {
        let node = overview
            .graph
            .nodes
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| ServerError::Malformed(format!("{}: decision `{name}` is not in {OVERVIEW_FILE}", path.display())))?;
        columns.push(DecisionColumn {
            name: node.name.clone(),
            options: node.options.clone(),
        });
    }
    SummaryTable::read_csv(text.as_bytes(), columns).map_err(wrap)
}
