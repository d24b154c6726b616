//! Permutation runs: the whole multiverse re-executed on datasets whose
//! shuffle column has been randomly permuted.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use multiverse_core::Manifest;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::{execute, interpreter_parts, jobs_for, prepare, run_hook};
use crate::lock::DirLock;
use crate::output::read_estimate;
use crate::{RunError, RunOptions, Status, OUTPUT_DIR};

pub const NULL_FILE: &str = "null.csv";
pub const NULL_DIR: &str = "null";

#[derive(Debug, Clone, PartialEq)]
pub struct NullRun {
    pub shuffles: usize,
    pub universes: usize,
    /// `(shuffle, uid, estimate text)` for every successful execution.
    pub estimates: Vec<(usize, usize, String)>,
    pub failed: usize,
    pub wall_seconds: f64,
}

/// Writes `n` copies of `dataset` to `<dest>/shuffle_<s>/<file name>` with
/// only `column` permuted. All copies come from one RNG stream seeded with
/// `seed`, so the same seed reproduces the same files.
pub fn shuffle_dataset(dataset: &Path, column: &str, n: usize, seed: u64, dest: &Path) -> Result<Vec<PathBuf>, RunError> {
    if n == 0 {
        return Err(RunError::NoShuffles);
    }
    let mut r = csv::Reader::from_path(dataset).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => RunError::Malformed(format!("cannot read dataset {}: {e}", dataset.display())),
        _ => RunError::Csv(e),
    })?;
    let header = r.headers()?.clone();
    let col = header.iter().position(|h| h == column).ok_or_else(|| RunError::MissingColumn {
        column: column.to_owned(),
        path: dataset.to_owned(),
    })?;
    let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>()?;
    let values: Vec<String> = records.iter().map(|rec| rec.get(col).unwrap_or("").to_owned()).collect();
    let name = dataset.file_name().map_or_else(|| "data.csv".into(), |n| n.to_owned());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::with_capacity(n);
    for s in 1..=n {
        let mut perm = values.clone();
        perm.shuffle(&mut rng);
        let dir = dest.join(format!("shuffle_{s}"));
        fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
        let path = dir.join(&name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&header)?;
        for (rec, v) in records.iter().zip(&perm) {
            let row: Vec<&str> = rec.iter().enumerate().map(|(i, x)| if i == col { v.as_str() } else { x }).collect();
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| RunError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs the multiverse once per shuffled dataset and writes `null.csv`
/// (`shuffle,uid,estimate`). Only point estimates are collected.
pub fn run_null(out_dir: &Path, n: usize, seed: u64, opts: &RunOptions) -> Result<NullRun, RunError> {
    if n == 0 {
        return Err(RunError::NoShuffles);
    }
    let out_dir = fs::canonicalize(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let manifest = Manifest::load(&out_dir)?;
    let dataset = manifest.dataset.clone().ok_or(RunError::NoDataset)?;
    let column = manifest.shuffle_column.clone().ok_or(RunError::NoShuffleColumn)?;
    let _lock = DirLock::acquire(&out_dir)?;
    let interpreter = interpreter_parts(&manifest)?;

    let null_dir = out_dir.join(NULL_DIR);
    if null_dir.exists() {
        fs::remove_dir_all(&null_dir).map_err(|e| RunError::io(&null_dir, e))?;
    }
    let data_files = shuffle_dataset(&dataset, &column, n, seed, &null_dir)?;

    if let Some(h) = &manifest.before_execute {
        run_hook(h, &out_dir, "before_execute")?;
    }
    let mut jobs = Vec::new();
    for (s, data) in data_files.iter().enumerate() {
        let work = data.parent().expect("shuffle dir").to_owned();
        prepare(&work, std::iter::empty())?;
        jobs.extend(jobs_for(&manifest, &out_dir, &work, Some(data.clone())).into_iter().map(|j| (s + 1, j)));
    }
    let start = Instant::now();
    let plain: Vec<_> = jobs.iter().map(|(_, j)| j.clone()).collect();
    let statuses = execute(&plain, &interpreter, opts);
    let wall = start.elapsed();
    if let Some(h) = &manifest.after_execute {
        run_hook(h, &out_dir, "after_execute")?;
    }

    let failed = statuses.iter().filter(|s| s.status != Status::Ok).count();
    let mut estimates = Vec::new();
    for (s, job) in &jobs {
        let ok = statuses
            .iter()
            .any(|st| st.uid == job.uid && st.log == job.log && st.status == Status::Ok);
        if !ok {
            continue;
        }
        if let Ok(e) = read_estimate(&job.work_dir.join(OUTPUT_DIR), job.uid) {
            estimates.push((*s, job.uid, e.estimate));
        }
    }
    estimates.sort_by_key(|(s, u, _)| (*s, *u));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["shuffle", "uid", "estimate"])?;
    for (s, u, e) in &estimates {
        w.write_record([s.to_string().as_str(), u.to_string().as_str(), e.as_str()])?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Malformed(e.to_string()))?;
    let path = out_dir.join(NULL_FILE);
    fs::write(&path, bytes).map_err(|e| RunError::io(&path, e))?;

    Ok(NullRun {
        shuffles: n,
        universes: manifest.universes.len(),
        estimates,
        failed,
        wall_seconds: wall.as_secs_f64(),
    })
}

/// Reads `null.csv` as `(shuffle, uid, estimate)` triples; `None` if absent.
pub fn load_null(out_dir: &Path) -> Result<Option<Vec<(usize, usize, f64)>>, RunError> {
    let path = out_dir.join(NULL_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(RunError::io(&path, e)),
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || RunError::Malformed(format!("{}: bad row {:?}", path.display(), rec));
        out.push((
            rec[0].parse().map_err(|_| bad())?,
            rec[1].parse().map_err(|_| bad())?,
            rec[2].parse().map_err(|_| bad())?,
        ));
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffles_only_the_column_and_is_seeded() {
        let d = tempfile::tempdir().unwrap();
        let data = d.path().join("d.csv");
        let body: String = std::iter::once("x,y\n".to_owned())
            .chain((0..50).map(|i| format!("{i},{}\n", i * 10)))
            .collect();
        fs::write(&data, &body).unwrap();
        let a = shuffle_dataset(&data, "x", 3, 7, &d.path().join("a")).unwrap();
        let b = shuffle_dataset(&data, "x", 3, 7, &d.path().join("b")).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
        let first = fs::read_to_string(&a[0]).unwrap();
        assert_ne!(first, body);
        assert_ne!(first, fs::read_to_string(&a[1]).unwrap());
        let mut xs = Vec::new();
        for (i, line) in first.lines().skip(1).enumerate() {
            let (x, y) = line.split_once(',').unwrap();
            assert_eq!(y, (i * 10).to_string());
            xs.push(x.parse::<usize>().unwrap());
        }
        xs.sort();
        assert_eq!(xs, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        let d = tempfile::tempdir().unwrap();
        let data = d.path().join("d.csv");
        fs::write(&data, "x\n1\n").unwrap();
        assert!(matches!(shuffle_dataset(&data, "z", 1, 0, d.path()), Err(RunError::MissingColumn { .. })));
        assert!(matches!(shuffle_dataset(&data, "x", 0, 0, d.path()), Err(RunError::NoShuffles)));
        let one = shuffle_dataset(&data, "x", 1, 0, &d.path().join("n")).unwrap();
        assert_eq!(fs::read_to_string(&one[0]).unwrap(), "x\n1\n");
    }
}
