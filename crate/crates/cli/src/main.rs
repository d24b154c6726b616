//! `multiverse`: compile a spec into universe scripts, run them, merge the
//! outputs and serve the results.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use multiverse_core::{compile_file, CompileOptions};
use multiverse_runner::{merge, run, run_null, RunOptions, RESULTS_FILE};
use multiverse_server::{router, serve, AppState};

#[derive(Parser)]
#[command(name = "multiverse", version, about = "Author, execute and explore multiverse analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile an annotated script into one script per universe.
    Compile {
        spec: PathBuf,
        /// Output directory (default: the config's output_dir, else ./multiverse next to the spec).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Replace the scripts in a non-empty output directory.
        #[arg(long)]
        force: bool,
        /// Override a config key, e.g. `--config language=python`.
        #[arg(long = "config", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Execute every compiled universe, then merge the outputs.
    Run {
        dir: PathBuf,
        /// Parallel universe processes (default: number of CPUs).
        #[arg(long, short)]
        jobs: Option<usize>,
        /// Per-universe wall-clock limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Instead of a normal run, rerun the multiverse on N shuffled datasets
        /// (100 when N is omitted).
        #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "100")]
        null: Option<usize>,
        /// Seed for the shuffles.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Do not write results.csv after the run.
        #[arg(long)]
        no_merge: bool,
    },
    /// Collect per-universe outputs into results.csv.
    Merge { dir: PathBuf },
    /// Serve the explorer API for a run directory.
    Serve {
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory with a built UI bundle to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

struct Failure {
    code: &'static str,
    detail: String,
}

impl Failure {
    fn new(code: &'static str, detail: impl ToString) -> Self {
        Failure {
            code,
            detail: detail.to_string(),
        }
    }
}

macro_rules! fail {
    ($e:expr) => {{
        let e = $e;
        Failure::new(e.code(), e)
    }};
}

fn compile(spec: PathBuf, out: Option<PathBuf>, force: bool, overrides: Vec<String>) -> Result<(), Failure> {
    let overrides = overrides
        .into_iter()
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_owned(), v.trim().to_owned())),
            None => Err(Failure::new("config-override", format!("`{kv}` is not KEY=VALUE"))),
        })
        .collect::<Result<_, _>>()?;
    let c = compile_file(&spec, out.as_deref(), &CompileOptions { overrides, force }).map_err(|e| fail!(e))?;
    for w in &c.warnings {
        eprintln!("warning: line {}: {}", w.line, w.message);
    }
    println!("{} universes", c.universes.len());
    eprintln!("wrote {}", c.out_dir.display());
    Ok(())
}

fn run_cmd(
    dir: PathBuf,
    jobs: Option<usize>,
    timeout: Option<f64>,
    null: Option<usize>,
    seed: u64,
    no_merge: bool,
) -> Result<(), Failure> {
    let mut opts = RunOptions::default();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::new("usage", "--jobs must be at least 1"));
        }
        opts.jobs = j;
    }
    if let Some(t) = timeout {
        opts.timeout = Some(
            Duration::try_from_secs_f64(t)
                .ok()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| Failure::new("usage", "--timeout must be a positive number of seconds"))?,
        );
    }
    if let Some(n) = null {
        let r = run_null(&dir, n, seed, &opts).map_err(|e| fail!(e))?;
        println!(
            "null: {} shuffles x {} universes, {} estimates, {} failed ({:.1}s)",
            r.shuffles,
            r.universes,
            r.estimates.len(),
            r.failed,
            r.wall_seconds
        );
        return Ok(());
    }
    let report = run(&dir, &opts).map_err(|e| fail!(e))?;
    for u in report.universes.iter().filter(|u| u.status != multiverse_runner::Status::Ok) {
        eprintln!(
            "universe {} {}: {} (log: {})",
            u.uid,
            u.status.as_str(),
            u.message.as_deref().unwrap_or(""),
            u.log.display()
        );
    }
    println!(
        "ran {} universes: {} ok, {} failed ({:.1}s)",
        report.attempted, report.succeeded, report.failed, report.wall_seconds
    );
    if !no_merge {
        merge_cmd(dir)?;
    }
    Ok(())
}

fn merge_cmd(dir: PathBuf) -> Result<(), Failure> {
    let m = merge(&dir).map_err(|e| fail!(e))?;
    for (uid, msg) in &m.diagnostics {
        eprintln!("universe {uid}: {msg}");
    }
    println!("merged {} universes into {RESULTS_FILE} ({} failed)", m.rows.len(), m.failed());
    Ok(())
}

fn serve_cmd(dir: PathBuf, host: std::net::IpAddr, port: u16, ui_dir: Option<PathBuf>) -> Result<(), Failure> {
    let state = AppState::load(&dir).map_err(|e| fail!(e))?;
    for w in &state.artifacts.warnings {
        eprintln!("warning: {w}");
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new("io", e))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port))
            .await
            .map_err(|e| Failure::new("io", format!("cannot listen on {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::new("io", e))?;
        println!("serving {} at http://{addr}", dir.display());
        let _ = std::io::stdout().flush();
        serve(listener, router(state, ui_dir)).await.map_err(|e| fail!(e))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            eprint!("error[usage]: {}", text.strip_prefix("error: ").unwrap_or(&text));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Compile {
            spec,
            out,
            force,
            overrides,
        } => compile(spec, out, force, overrides),
        Command::Run {
            dir,
            jobs,
            timeout,
            null,
            seed,
            no_merge,
        } => run_cmd(dir, jobs, timeout, null, seed, no_merge),
        Command::Merge { dir } => merge_cmd(dir),
        Command::Serve {
            dir,
            port,
            host,
            ui_dir,
        } => serve_cmd(dir, host, port, ui_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let detail = f.detail.lines().map(str::trim).collect::<Vec<_>>().join("; ");
            eprintln!("error[{}]: {detail}", f.code);
            ExitCode::FAILURE
        }
    }
}
