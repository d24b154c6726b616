//! Per-universe output files written by the scripts themselves.
//!
//! `estimate_<uid>.csv` has the header `uid,estimate,p,fit` (`p` and `fit` may
//! be absent or empty) and one data row. Optional sidecars hold one number per
//! line (`draws_<uid>.csv`, `lpd_<uid>.csv`, with or without a header) or
//! `observed,predicted` pairs (`pred_<uid>.csv`).

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

/// One validated estimate row. Numbers keep their original text so that
/// merging reproduces them exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub uid: usize,
    pub estimate: String,
    pub p: Option<String>,
    pub fit: Option<String>,
}

impl EstimateRow {
    pub fn estimate_value(&self) -> f64 {
        self.estimate.parse().expect("validated on read")
    }
}

pub fn estimate_path(output_dir: &Path, uid: usize) -> PathBuf {
    output_dir.join(format!("estimate_{uid}.csv"))
}

pub fn sidecar_paths(output_dir: &Path, uid: usize) -> [PathBuf; 3] {
    ["draws", "pred", "lpd"].map(|k| output_dir.join(format!("{k}_{uid}.csv")))
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "None" | "null")
}

fn number(cell: &str, what: &str) -> Result<f64, String> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{what} `{cell}` is not a finite number"))
}

/// Reads and validates `estimate_<uid>.csv`; errors are human-readable
/// diagnostics.
pub fn read_estimate(output_dir: &Path, uid: usize) -> Result<EstimateRow, String> {
    let path = estimate_path(output_dir, uid);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(format!("no output file {}", path.display()))
        }
        Err(e) => return Err(format!("cannot read {}: {e}", path.display())),
    };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(|h| h.trim_matches('"').to_owned())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(c_uid), Some(c_est)) = (col("uid"), col("estimate")) else {
        return Err(format!("{}: header must contain `uid` and `estimate`", path.display()));
    };
    let (c_p, c_fit) = (col("p"), col("fit"));
    let mut rows = r.records();
    let rec = match rows.next() {
        Some(rec) => rec.map_err(|e| format!("{}: {e}", path.display()))?,
        None => return Err(format!("{}: no data row", path.display())),
    };
    if rows.next().is_some() {
        return Err(format!("{}: expected exactly one data row", path.display()));
    }
    let cell = |c: usize| rec.get(c).unwrap_or("");
    let file_uid: f64 = number(cell(c_uid), "uid")?;
    if file_uid != uid as f64 {
        return Err(format!("{}: uid {} does not match universe {uid}", path.display(), cell(c_uid)));
    }
    let estimate = cell(c_est).to_owned();
    number(&estimate, "estimate")?;
    let optional = |c: Option<usize>, what: &str, ok: &dyn Fn(f64) -> bool| -> Result<Option<String>, String> {
        match c.map(cell) {
            None => Ok(None),
            Some(v) if is_missing(v) => Ok(None),
            Some(v) => {
                let x = number(v, what)?;
                if !ok(x) {
                    return Err(format!("{what} `{v}` is out of range"));
                }
                Ok(Some(v.to_owned()))
            }
        }
    };
    Ok(EstimateRow {
        uid,
        estimate,
        p: optional(c_p, "p-value", &|x| (0.0..=1.0).contains(&x))?,
        fit: optional(c_fit, "fit", &|x| x >= 0.0)?,
    })
}

fn read_optional(path: &Path) -> Result<Option<String>, String> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
        Err(e) => Err(format!("cannot read {}: {e}", path.display())),
    }
}

fn read_columns(path: &Path, width: usize) -> Result<Option<Vec<Vec<f64>>>, String> {
    let Some(text) = read_optional(path)? else { return Ok(None) };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        if rec.len() < width {
            return Err(format!("{}: line {} has fewer than {width} columns", path.display(), i + 1));
        }
        let parsed: Result<Vec<f64>, _> = (0..width).map(|c| rec[c].parse::<f64>()).collect();
        match parsed {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(format!("{}: line {} is not numeric", path.display(), i + 1)),
        }
    }
    if out.is_empty() {
        return Err(format!("{}: no values", path.display()));
    }
    Ok(Some(out))
}

/// Sampled estimates, if the universe wrote any.
pub fn read_draws(output_dir: &Path, uid: usize) -> Result<Option<Vec<f64>>, String> {
    let path = output_dir.join(format!("draws_{uid}.csv"));
    Ok(read_columns(&path, 1)?.map(|rows| rows.into_iter().map(|r| r[0]).collect()))
}

/// Held-out log predictive densities, one per point.
pub fn read_lpd(output_dir: &Path, uid: usize) -> Result<Option<Vec<f64>>, String> {
    let path = output_dir.join(format!("lpd_{uid}.csv"));
    Ok(read_columns(&path, 1)?.map(|rows| rows.into_iter().map(|r| r[0]).collect()))
}

/// `(observed, predicted)` pairs for predictive checks.
pub fn read_predictions(output_dir: &Path, uid: usize) -> Result<Option<Vec<(f64, f64)>>, String> {
    let path = output_dir.join(format!("pred_{uid}.csv"));
    Ok(read_columns(&path, 2)?.map(|rows| rows.into_iter().map(|r| (r[0], r[1])).collect()))
}
