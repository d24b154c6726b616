//! Executes compiled universes, merges their outputs and runs permutation
//! (null) multiverses.
//!
//! Every universe script runs as its own child process with the working
//! directory set to the output directory (or a shuffle directory in null mode).
//! It receives `BOBA_DATA_FILE`, `BOBA_UNIVERSE` and `BOBA_OUTPUT_DIR` and must
//! write `output/estimate_<uid>.csv`.

mod error;
mod exec;
mod lock;
pub mod merge;
pub mod null;
pub mod output;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use error::RunError;
pub use exec::{interpreter_available, run};
pub use merge::{load_results, merge, MergeReport, ResultRow, RESULTS_FILE};
pub use null::{load_null, run_null, shuffle_dataset, NullRun, NULL_FILE};
pub use output::{read_draws, read_estimate, read_lpd, read_predictions, EstimateRow};

pub const LOG_DIR: &str = "logs";
pub const OUTPUT_DIR: &str = "output";
pub const REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Maximum number of concurrent child processes.
    pub jobs: usize,
    pub timeout: Option<Duration>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
    Timeout,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseStatus {
    pub uid: usize,
    pub status: Status,
    pub exit_code: Option<i32>,
    pub log: PathBuf,
    pub message: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub attempted: usize,
    pub succeeded: usize,
    /// Failures and timeouts.
    pub failed: usize,
    pub wall_seconds: f64,
    pub universes: Vec<UniverseStatus>,
}

impl RunReport {
    fn from_statuses(mut universes: Vec<UniverseStatus>, wall: Duration) -> Self {
        universes.sort_by_key(|u| u.uid);
        let succeeded = universes.iter().filter(|u| u.status == Status::Ok).count();
        RunReport {
            attempted: universes.len(),
            succeeded,
            failed: universes.len() - succeeded,
            wall_seconds: wall.as_secs_f64(),
            universes,
        }
    }

    pub fn status(&self, uid: usize) -> Option<Status> {
        self.universes.iter().find(|u| u.uid == uid).map(|u| u.status)
    }

    pub fn load(out_dir: &std::path::Path) -> Result<Option<Self>, RunError> {
        let path = out_dir.join(REPORT_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(RunError::io(&path, e)),
        }
    }
}
