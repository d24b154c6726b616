use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use multiverse_core::{compile_file, CompileOptions};
use multiverse_runner::*;
use proptest::prelude::*;

/// Writes `src` as `spec.sh` in `dir` and compiles it to `dir/mv`.
fn compile(dir: &Path, src: &str) -> PathBuf {
    let spec = dir.join("spec.sh");
    fs::write(&spec, src).unwrap();
    let out = dir.join("mv");
    compile_file(&spec, Some(&out), &CompileOptions::default()).unwrap();
    out
}

const EMIT: &str = "printf 'uid,estimate,p,fit\\n%s,%s,%s,%s\\n' \"$BOBA_UNIVERSE\" \"$est\" \"$p\" \"$fit\" > output/estimate_{{_n}}.csv\n";

fn spec_with(body: &str) -> String {
    format!("# --- (BOBA_CONFIG)\n{{\"language\": \"shell\"}}\n# --- (MAIN)\n{body}{EMIT}")
}

fn opts(jobs: usize) -> RunOptions {
    RunOptions { jobs, timeout: None }
}

#[test]
fn one_failure_does_not_stop_the_others() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(
        d.path(),
        &spec_with("v={{v = 1, 2, 3}}\nif [ $v -eq 2 ]; then echo boom >&2; exit 1; fi\nest=$v; p=0.5; fit=0.1\n"),
    );
    let report = run(&out, &opts(2)).unwrap();
    assert_eq!((report.attempted, report.succeeded, report.failed), (3, 2, 1));
    assert_eq!(report.status(2), Some(Status::Failed));
    assert!(fs::read_to_string(out.join("logs/universe_2.log")).unwrap().contains("boom"));

    let merged = merge(&out).unwrap();
    assert_eq!(merged.rows.len(), 3);
    assert_eq!(merged.failed(), 1);
    assert_eq!(
        fs::read_to_string(out.join(RESULTS_FILE)).unwrap(),
        "uid,estimate,p,fit,status\n1,1,0.5,0.1,ok\n2,,,,failed\n3,3,0.5,0.1,ok\n"
    );
    assert_eq!(load_results(&out).unwrap(), merged.rows);
    assert!(!out.join(".multiverse.lock").exists());
}

#[test]
fn empty_manifest_gives_empty_report() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("est=1; p=; fit=\n"));
    let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    m["universes"] = serde_json::json!([]);
    fs::write(out.join("manifest.json"), m.to_string()).unwrap();
    let r = run(&out, &opts(4)).unwrap();
    assert_eq!((r.attempted, r.succeeded, r.failed), (0, 0, 0));
}

#[test]
fn parallelism_bounds_wall_time() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("i={{i = 1, 2, 3, 4, 5, 6, 7, 8}}; j={{j = 1, 2}}\nsleep 0.4\nest=$i; p=; fit=\n"));
    let start = Instant::now();
    let r = run(&out, &opts(8)).unwrap();
    let wall = start.elapsed().as_secs_f64();
    assert_eq!(r.succeeded, 16);
    // 16 scripts on 8 workers: about two script durations, within 50%
    assert!((0.4..=1.2).contains(&wall), "wall {wall}");
}

#[test]
fn merge_is_idempotent_and_bit_exact() {
    let d = tempfile::tempdir().unwrap();
    let body = "\
k={{k = 1, 2}}
est=0.1000000000000000055511151231257827; p=1e-300; fit=2.5E-1
i=0; while [ $i -lt 200 ]; do echo \"$k.$i\"; i=$((i+1)); done > output/draws_{{_n}}.csv
";
    let out = compile(d.path(), &spec_with(body));
    run(&out, &opts(2)).unwrap();
    merge(&out).unwrap();
    let a = fs::read(out.join(RESULTS_FILE)).unwrap();
    merge(&out).unwrap();
    assert_eq!(a, fs::read(out.join(RESULTS_FILE)).unwrap());
    let rows = load_results(&out).unwrap();
    assert_eq!(rows[0].estimate.as_deref(), Some("0.1000000000000000055511151231257827"));
    assert_eq!(rows[0].p.as_deref(), Some("1e-300"));
    assert_eq!(rows[0].fit.as_deref(), Some("2.5E-1"));
    assert_eq!(rows[0].estimate_value(), Some(0.1));
    let draws = read_draws(&out.join("output"), 2).unwrap().unwrap();
    assert_eq!(draws.len(), 200);
    let expected: Vec<f64> = (0..200).map(|i| format!("2.{i}").parse().unwrap()).collect();
    assert_eq!(draws, expected);
}

#[test]
fn job_count_does_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("a={{a = 1, 2, 3}}; b={{b = 10, 20}}\nest=$((a*b)); p=; fit=\n[ $a -eq 3 ] && [ $b -eq 20 ] && exit 3\n"));
    run(&out, &opts(1)).unwrap();
    merge(&out).unwrap();
    let serial = fs::read(out.join(RESULTS_FILE)).unwrap();
    run(&out, &opts(8)).unwrap();
    merge(&out).unwrap();
    assert_eq!(serial, fs::read(out.join(RESULTS_FILE)).unwrap());
}

#[test]
fn malformed_output_is_a_failure_with_diagnostic() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("est={{e = 1, oops}}; p=; fit=\n"));
    let r = run(&out, &opts(2)).unwrap();
    assert_eq!(r.status(2), Some(Status::Failed));
    assert!(r.universes[1].message.as_deref().unwrap().contains("oops"));
    // without a report the merge itself detects the problem
    fs::remove_file(out.join(REPORT_FILE)).unwrap();
    let m = merge(&out).unwrap();
    assert_eq!(m.rows[1].status, Status::Failed);
    assert_eq!(m.diagnostics.len(), 1);
}

#[test]
fn missing_interpreter_aborts_before_launch() {
    let d = tempfile::tempdir().unwrap();
    let src = "# --- (BOBA_CONFIG)\n{\"language\": \"shell\", \"interpreter\": \"no-such-shell-abc\"}\n# --- (MAIN)\necho hi\n";
    let out = compile(d.path(), src);
    let e = run(&out, &opts(1)).unwrap_err();
    assert!(matches!(e, RunError::InterpreterMissing(_)));
    assert_eq!(e.code(), "interpreter-missing");
    assert!(!out.join("logs").exists());
}

#[test]
fn held_lock_rejects_a_second_run() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("est=1; p=; fit=\n"));
    fs::write(out.join(".multiverse.lock"), "1").unwrap();
    assert!(matches!(run(&out, &opts(1)), Err(RunError::Locked(_))));
}

#[test]
fn timeouts_are_reported() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("s={{s = 0, 5}}\nsleep $s\nest=1; p=; fit=\n"));
    let r = run(&out, &RunOptions { jobs: 2, timeout: Some(Duration::from_millis(500)) }).unwrap();
    assert_eq!(r.status(1), Some(Status::Ok));
    assert_eq!(r.status(2), Some(Status::Timeout));
    assert_eq!(merge(&out).unwrap().rows[1].status, Status::Timeout);
}

#[test]
fn hooks_run_around_execution() {
    let d = tempfile::tempdir().unwrap();
    let src = "# --- (BOBA_CONFIG)\n{\"language\": \"shell\", \"before_execute\": \"echo before > hook.txt\", \"after_execute\": \"ls output >> hook.txt\"}\n# --- (MAIN)\nest=1; p=; fit=\n".to_owned() + EMIT;
    let out = compile(d.path(), &src);
    run(&out, &opts(1)).unwrap();
    assert_eq!(fs::read_to_string(out.join("hook.txt")).unwrap(), "before\nestimate_1.csv\n");
}

const NULL_SPEC: &str = "\
# --- (BOBA_CONFIG)
{\"language\": \"shell\", \"dataset\": \"data.csv\", \"shuffle_column\": \"x\"}
# --- (MAIN)
off={{off = 0, 100}}
est=$(awk -F, 'NR > 1 { s += $1 * $2 } END { print s + '$off' }' \"$BOBA_DATA_FILE\"); p=; fit=
";

#[test]
fn null_runs_are_seeded_and_sized() {
    let d = tempfile::tempdir().unwrap();
    let rows: String = (1..=8).map(|i| format!("{i},{}\n", i % 3)).collect();
    fs::write(d.path().join("data.csv"), format!("x,y\n{rows}")).unwrap();
    let out = compile(d.path(), &(NULL_SPEC.to_owned() + EMIT));
    let a = run_null(&out, 5, 7, &opts(4)).unwrap();
    assert_eq!(a.estimates.len(), 10);
    let first = fs::read(out.join(NULL_FILE)).unwrap();
    run_null(&out, 5, 7, &opts(1)).unwrap();
    assert_eq!(first, fs::read(out.join(NULL_FILE)).unwrap());
    let loaded = load_null(&out).unwrap().unwrap();
    assert_eq!(loaded.len(), 10);
    assert!(loaded.iter().all(|&(s, u, _)| (1..=5).contains(&s) && (1..=2).contains(&u)));
    run_null(&out, 5, 8, &opts(4)).unwrap();
    assert_ne!(first, fs::read(out.join(NULL_FILE)).unwrap());
}

#[test]
fn single_row_shuffle_matches_observed() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("data.csv"), "x,y\n3,4\n").unwrap();
    let out = compile(d.path(), &(NULL_SPEC.to_owned() + EMIT));
    run(&out, &opts(2)).unwrap();
    merge(&out).unwrap();
    let observed: Vec<f64> = load_results(&out).unwrap().iter().map(|r| r.estimate_value().unwrap()).collect();
    run_null(&out, 1, 0, &opts(2)).unwrap();
    let null: Vec<f64> = load_null(&out).unwrap().unwrap().iter().map(|t| t.2).collect();
    assert_eq!(observed, vec![12.0, 112.0]);
    assert_eq!(null, observed);
}

#[test]
fn six_by_hundred_null_estimates() {
    let d = tempfile::tempdir().unwrap();
    let rows: String = (1..=10).map(|i| format!("{i},{}\n", i * 2)).collect();
    fs::write(d.path().join("data.csv"), format!("x,y\n{rows}")).unwrap();
    let src = NULL_SPEC.replace("{{off = 0, 100}}", "{{off = 0, 1, 2, 3, 4, 5}}").to_owned() + EMIT;
    let out = compile(d.path(), &src);
    let n = run_null(&out, 100, 1, &RunOptions::default()).unwrap();
    assert_eq!(n.estimates.len(), 600);
    assert_eq!(n.failed, 0);
}

#[test]
fn null_mode_configuration_errors() {
    let d = tempfile::tempdir().unwrap();
    let out = compile(d.path(), &spec_with("est=1; p=; fit=\n"));
    assert!(matches!(run_null(&out, 2, 0, &opts(1)), Err(RunError::NoDataset)));
    assert!(matches!(run_null(&out, 0, 0, &opts(1)), Err(RunError::NoShuffles)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn succeeded_set_ignores_other_failures(fail in prop::collection::vec(any::<bool>(), 6)) {
        let d = tempfile::tempdir().unwrap();
        let list: Vec<String> = fail.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| (i + 1).to_string()).collect();
        let body = format!("u={{{{u = 1, 2, 3, 4, 5, 6}}}}\nfor f in 0 {}; do [ $u -eq $f ] && exit 1; done\nest=$u; p=; fit=\n", list.join(" "));
        let out = compile(d.path(), &spec_with(&body));
        let r = run(&out, &opts(3)).unwrap();
        for (i, f) in fail.iter().enumerate() {
            let expected = if *f { Status::Failed } else { Status::Ok };
            prop_assert_eq!(r.status(i + 1), Some(expected));
        }
    }
}
