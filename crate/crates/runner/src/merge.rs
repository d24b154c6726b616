//! Collects per-universe estimate files into `results.csv`.

use std::fs;
use std::path::Path;

use multiverse_core::Manifest;

use crate::output::read_estimate;
use crate::{RunError, RunReport, Status, OUTPUT_DIR};

pub const RESULTS_FILE: &str = "results.csv";

/// One row of `results.csv`; metric cells are kept as their original text.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub uid: usize,
    pub estimate: Option<String>,
    pub p: Option<String>,
    pub fit: Option<String>,
    pub status: Status,
}

fn parse(v: &Option<String>) -> Option<f64> {
    v.as_deref().and_then(|s| s.parse().ok())
}

impl ResultRow {
    pub fn estimate_value(&self) -> Option<f64> {
        parse(&self.estimate)
    }
    pub fn p_value(&self) -> Option<f64> {
        parse(&self.p)
    }
    pub fn fit_value(&self) -> Option<f64> {
        parse(&self.fit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub rows: Vec<ResultRow>,
    /// Why a universe ended up failed.
    pub diagnostics: Vec<(usize, String)>,
}

impl MergeReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.status != Status::Ok).count()
    }
}

/// Builds `results.csv` with one row per compiled universe, in uid order.
///
/// Universes the last run reported as failed or timed out, and those whose
/// estimate file is missing or malformed, get empty metric cells.
pub fn merge(out_dir: &Path) -> Result<MergeReport, RunError> {
    let manifest = Manifest::load(out_dir)?;
    let report = RunReport::load(out_dir)?;
    let output = out_dir.join(OUTPUT_DIR);
    let mut rows = Vec::with_capacity(manifest.universes.len());
    let mut diagnostics = Vec::new();
    let mut uids: Vec<usize> = manifest.universes.iter().map(|u| u.uid).collect();
    uids.sort_unstable();
    for uid in uids {
        let failed = |status| ResultRow {
            uid,
            estimate: None,
            p: None,
            fit: None,
            status,
        };
        match report.as_ref().and_then(|r| r.status(uid)) {
            Some(s @ (Status::Failed | Status::Timeout)) => {
                rows.push(failed(s));
                continue;
            }
            _ => {}
        }
        match read_estimate(&output, uid) {
            Ok(e) => rows.push(ResultRow {
                uid,
                estimate: Some(e.estimate),
                p: e.p,
                fit: e.fit,
                status: Status::Ok,
            }),
            Err(msg) => {
                diagnostics.push((uid, msg));
                rows.push(failed(Status::Failed));
            }
        }
    }
    write_results(&out_dir.join(RESULTS_FILE), &rows)?;
    Ok(MergeReport { rows, diagnostics })
}

fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["uid", "estimate", "p", "fit", "status"])?;
    for r in rows {
        w.write_record([
            r.uid.to_string().as_str(),
            r.estimate.as_deref().unwrap_or(""),
            r.p.as_deref().unwrap_or(""),
            r.fit.as_deref().unwrap_or(""),
            r.status.as_str(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Malformed(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| RunError::io(path, e))
}

/// Reads `results.csv` back.
pub fn load_results(out_dir: &Path) -> Result<Vec<ResultRow>, RunError> {
    let path = out_dir.join(RESULTS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().collect::<Vec<_>>() != ["uid", "estimate", "p", "fit", "status"] {
        return Err(RunError::Malformed(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || RunError::Malformed(format!("{}: bad row {:?}", path.display(), rec));
        let cell = |i: usize| Some(rec[i].to_owned()).filter(|s| !s.is_empty());
        let status = match &rec[4] {
            "ok" => Status::Ok,
            "failed" => Status::Failed,
            "timeout" => Status::Timeout,
            _ => return Err(bad()),
        };
        let row = ResultRow {
            uid: rec[0].parse().map_err(|_| bad())?,
            estimate: cell(1),
            p: cell(2),
            fit: cell(3),
            status,
        };
        if status == Status::Ok && row.estimate_value().is_none_or(|e| !e.is_finite()) {
            return Err(bad());
        }
        rows.push(row);
    }
    Ok(rows)
}
