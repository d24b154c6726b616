use std::fs::{self, File};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use multiverse_core::Manifest;

use crate::lock::DirLock;
use crate::output::{estimate_path, read_estimate, sidecar_paths};
use crate::{RunError, RunOptions, RunReport, Status, UniverseStatus, LOG_DIR, OUTPUT_DIR, REPORT_FILE};

/// One script execution.
#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub uid: usize,
    pub script: PathBuf,
    /// Working directory; outputs land in `<work_dir>/output`.
    pub work_dir: PathBuf,
    pub log: PathBuf,
    pub data_file: Option<PathBuf>,
}

/// Whether the first word of `command` resolves to an executable.
pub fn interpreter_available(command: &str) -> bool {
    let Some(program) = command.split_whitespace().next() else {
        return false;
    };
    let executable = |p: &Path| {
        use std::os::unix::fs::PermissionsExt;
        p.metadata().is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
    };
    if program.contains('/') {
        return executable(Path::new(program));
    }
    std::env::var_os("PATH")
        .is_some_and(|paths| std::env::split_paths(&paths).any(|dir| executable(&dir.join(program))))
}

pub(crate) fn run_hook(command: &str, dir: &Path, hook: &'static str) -> Result<(), RunError> {
    log::info!("running {hook} hook: {command}");
    let out = Command::new("sh")
        .arg("-c")
        .arg(command)
        .current_dir(dir)
        .output()
        .map_err(|e| RunError::Hook {
            hook,
            detail: e.to_string(),
        })?;
    if out.status.success() {
        Ok(())
    } else {
        Err(RunError::Hook {
            hook,
            detail: format!("{}: {}", out.status, String::from_utf8_lossy(&out.stderr).trim()),
        })
    }
}

fn kill_group(child: &Child) {
    // The child leads its own process group, so this also reaches grandchildren.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
}

fn wait(child: &mut Child, timeout: Option<Duration>) -> std::io::Result<Option<ExitStatus>> {
    let Some(limit) = timeout else {
        return child.wait().map(Some);
    };
    let start = Instant::now();
    let mut pause = Duration::from_millis(1);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if start.elapsed() >= limit {
            kill_group(child);
            child.wait()?;
            return Ok(None);
        }
        std::thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(20));
    }
}

fn run_one(job: &Job, interpreter: &[String], timeout: Option<Duration>) -> UniverseStatus {
    let start = Instant::now();
    let done = |status, exit_code, message: Option<String>| UniverseStatus {
        uid: job.uid,
        status,
        exit_code,
        log: job.log.clone(),
        message,
        seconds: start.elapsed().as_secs_f64(),
    };
    let log = match File::create(&job.log) {
        Ok(f) => f,
        Err(e) => return done(Status::Failed, None, Some(format!("cannot create log: {e}"))),
    };
    let stderr = match log.try_clone() {
        Ok(f) => f,
        Err(e) => return done(Status::Failed, None, Some(format!("cannot create log: {e}"))),
    };
    let mut cmd = Command::new(&interpreter[0]);
    cmd.args(&interpreter[1..])
        .arg(&job.script)
        .current_dir(&job.work_dir)
        .env("BOBA_UNIVERSE", job.uid.to_string())
        .env("BOBA_OUTPUT_DIR", job.work_dir.join(OUTPUT_DIR))
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(stderr)
        .process_group(0);
    if let Some(data) = &job.data_file {
        cmd.env("BOBA_DATA_FILE", data);
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return done(Status::Failed, None, Some(format!("cannot start: {e}"))),
    };
    match wait(&mut child, timeout) {
        Err(e) => done(Status::Failed, None, Some(format!("wait failed: {e}"))),
        Ok(None) => done(Status::Timeout, None, Some("timed out".into())),
        Ok(Some(status)) if !status.success() => {
            done(Status::Failed, status.code(), Some(format!("exited with {status}")))
        }
        Ok(Some(status)) => match read_estimate(&job.work_dir.join(OUTPUT_DIR), job.uid) {
            Ok(_) => done(Status::Ok, status.code(), None),
            Err(msg) => done(Status::Failed, status.code(), Some(msg)),
        },
    }
}

/// Runs all jobs on at most `opts.jobs` worker threads, one child each.
pub(crate) fn execute(jobs: &[Job], interpreter: &[String], opts: &RunOptions) -> Vec<UniverseStatus> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let workers = opts.jobs.max(1).min(jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let status = run_one(job, interpreter, opts.timeout);
                if status.status != Status::Ok {
                    log::warn!("universe {} {}: {}", job.uid, status.status.as_str(), status.message.as_deref().unwrap_or(""));
                }
                results.lock().unwrap().push(status);
            });
        }
    });
    results.into_inner().unwrap()
}

pub(crate) fn interpreter_parts(manifest: &Manifest) -> Result<Vec<String>, RunError> {
    if !interpreter_available(&manifest.interpreter) {
        return Err(RunError::InterpreterMissing(manifest.interpreter.clone()));
    }
    Ok(manifest.interpreter.split_whitespace().map(str::to_owned).collect())
}

/// Creates `output/` and `logs/` under `dir` and removes outputs left over
/// from earlier runs of the given universes.
pub(crate) fn prepare(dir: &Path, uids: impl Iterator<Item = usize>) -> Result<(), RunError> {
    for sub in [OUTPUT_DIR, LOG_DIR] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| RunError::io(&p, e))?;
    }
    let out = dir.join(OUTPUT_DIR);
    for uid in uids {
        let stale = std::iter::once(estimate_path(&out, uid)).chain(sidecar_paths(&out, uid));
        for p in stale {
            match fs::remove_file(&p) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(RunError::io(&p, e)),
            }
        }
    }
    Ok(())
}

pub(crate) fn jobs_for(manifest: &Manifest, out_dir: &Path, work_dir: &Path, data_file: Option<PathBuf>) -> Vec<Job> {
    manifest
        .universes
        .iter()
        .map(|u| Job {
            uid: u.uid,
            script: out_dir.join(&u.script),
            work_dir: work_dir.to_owned(),
            log: work_dir.join(LOG_DIR).join(format!("universe_{}.log", manifest.padded(u.uid))),
            data_file: data_file.clone(),
        })
        .collect()
}

/// Executes every compiled universe in `out_dir` and writes `run_report.json`.
///
/// A failing universe is recorded and does not stop the others. The run is
/// aborted before anything starts if the interpreter is missing or another
/// run holds the directory lock.
pub fn run(out_dir: &Path, opts: &RunOptions) -> Result<RunReport, RunError> {
    let out_dir = fs::canonicalize(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let manifest = Manifest::load(&out_dir)?;
    let _lock = DirLock::acquire(&out_dir)?;
    let interpreter = interpreter_parts(&manifest)?;
    if let Some(h) = &manifest.before_execute {
        run_hook(h, &out_dir, "before_execute")?;
    }
    prepare(&out_dir, manifest.universes.iter().map(|u| u.uid))?;
    let jobs = jobs_for(&manifest, &out_dir, &out_dir, manifest.dataset.clone());
    let start = Instant::now();
    let statuses = execute(&jobs, &interpreter, opts);
    let report = RunReport::from_statuses(statuses, start.elapsed());
    if let Some(h) = &manifest.after_execute {
        run_hook(h, &out_dir, "after_execute")?;
    }
    let path = out_dir.join(REPORT_FILE);
    fs::write(&path, serde_json::to_vec_pretty(&report)?).map_err(|e| RunError::io(&path, e))?;
    Ok(report)
}
