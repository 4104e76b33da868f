//! End-to-end checks of the binary: real processes, real files, byte-level
//! output comparisons.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Arc, OnceLock};

use nasbench::enumerator::{enumerate_space, write_index_file, SpaceParams};
use nasbench::oracle::{self, EPOCH_BUDGETS, NUM_TRIALS};
use tempfile::TempDir;

const TRIVIAL: &str = "matrix=0100;ops=";

/// Index file over the (3, 9) space, written once; 7 cells keep every
/// invocation fast.
fn mini_index() -> &'static Path {
    static STATE: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    let (_dir, path) = STATE.get_or_init(|| {
        let dir = TempDir::new().expect("tempdir");
        let path = dir.path().join("mini.space");
        let index = enumerate_space(SpaceParams::new(3, 9).expect("params"));
        write_index_file(&index, &path).expect("write index");
        (dir, path)
    });
    path
}

fn index_arg() -> String {
    mini_index().display().to_string()
}

/// Runs the binary with a scrubbed environment so only explicit flags and
/// `env_index` influence behaviour.
fn run_with_env(args: &[&str], env_index: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nasbench"));
    cmd.args(args).env_remove("NASBENCH_INDEX");
    if let Some(path) = env_index {
        cmd.env("NASBENCH_INDEX", path);
    }
    cmd.output().expect("the binary should spawn")
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, None)
}

fn ok_stdout(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn stderr_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runtime failures print exactly one `error: ...` line.
fn assert_one_error_line(args: &[&str]) -> String {
    let text = stderr_of(args);
    assert_eq!(text.lines().count(), 1, "expected one line, got:\n{text}");
    assert!(text.starts_with("error: "), "missing prefix: {text}");
    text
}

#[test]
fn enumerate_writes_a_header_that_carries_the_count() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("tiny.space");
    let path_arg = path.display().to_string();
    let stdout = ok_stdout(&[
        "enumerate",
        "--max-vertices",
        "3",
        "--max-edges",
        "9",
        "--out",
        &path_arg,
    ]);
    let summary = String::from_utf8(stdout).unwrap();
    assert!(summary.starts_with("7 cells"), "summary was {summary:?}");

    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("count=7"), "header was {header:?}");
    assert!(header.contains("max_vertices=3"), "header was {header:?}");
    assert_eq!(text.lines().count(), 8, "header plus one line per cell");

    // Without --out the same listing lands on stdout.
    let streamed = ok_stdout(&["enumerate", "--max-vertices", "3", "--max-edges", "9"]);
    assert_eq!(String::from_utf8(streamed).unwrap(), text);
}

#[test]
fn query_is_reproducible_for_a_fixed_seed() {
    let index = index_arg();
    let args = [
        "query",
        "--spec",
        TRIVIAL,
        "--oracle",
        "synthetic:seed=1",
        "--seed",
        "7",
        "--index",
        &index,
    ];
    let first = ok_stdout(&args);
    let second = ok_stdout(&args);
    assert_eq!(first, second, "two runs with one seed must match");

    let record: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(record["epochs"], 108, "full training is the default budget");
    assert!(record["digest"].is_string());
    assert!(record["valid_acc"].as_f64().unwrap() > 0.0);

    // Pinning the trial bypasses the sampling seed entirely.
    let pinned = [
        "query",
        "--spec",
        TRIVIAL,
        "--trial",
        "2",
        "--oracle",
        "synthetic:seed=1",
        "--index",
        &index,
    ];
    let a = ok_stdout(&pinned);
    let b = ok_stdout(&pinned);
    assert_eq!(a, b);
    let record: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(record["trial"], 2);
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let index = index_arg();

    // Usage errors are clap's department; just require a nonzero exit.
    assert!(!run(&["enumerate", "--frobnicate"]).status.success());
    let selector_help = stderr_of(&[
        "query",
        "--spec",
        TRIVIAL,
        "--oracle",
        "csv:x",
        "--index",
        &index,
    ]);
    assert!(
        selector_help.contains("synthetic:seed=<n>") && selector_help.contains("tabular:<path>"),
        "selector error should name both forms: {selector_help}"
    );

    // Runtime errors are ours: one line, error: prefix.
    let no_index = assert_one_error_line(&["stats"]);
    assert!(
        no_index.contains("NASBENCH_INDEX") && no_index.contains("--index"),
        "should point at both ways to supply an index: {no_index}"
    );

    let missing = dbg_digest();
    let unknown = assert_one_error_line(&[
        "query",
        "--digest",
        &missing,
        "--oracle",
        "synthetic:seed=1",
        "--index",
        &index,
    ]);
    assert!(unknown.contains(&missing), "should echo the digest: {unknown}");

    let bad_budget = assert_one_error_line(&[
        "query",
        "--spec",
        TRIVIAL,
        "--epochs",
        "7",
        "--oracle",
        "synthetic:seed=1",
        "--index",
        &index,
    ]);
    assert!(bad_budget.contains('7'), "should echo the budget: {bad_budget}");

    let no_file = assert_one_error_line(&[
        "query",
        "--spec",
        TRIVIAL,
        "--oracle",
        "tabular:/no/such/file.jsonl",
        "--index",
        &index,
    ]);
    assert!(no_file.contains("/no/such/file.jsonl"), "{no_file}");
}

/// A 32-hex digest that cannot belong to the mini index.
fn dbg_digest() -> String {
    "f".repeat(32)
}

#[test]
fn convert_metrics_roundtrips_and_rejects_corrupt_records() {
    let dir = TempDir::new().unwrap();
    let index = index_arg();

    // Canonical dump straight from the library: cells in digest order,
    // budgets and trials ascending.
    let space = Arc::new(enumerate_space(SpaceParams::new(3, 9).unwrap()));
    let oracle = oracle::make_synthetic(Arc::clone(&space), 11);
    let mut lines = Vec::new();
    for cell in space.cells() {
        for &budget in &EPOCH_BUDGETS {
            for trial in 1..=NUM_TRIALS {
                let record = oracle.record(cell.digest(), budget, trial).unwrap();
                lines.push(serde_json::to_string(&record).unwrap());
            }
        }
    }
    let forward = lines.join("\n") + "\n";
    lines.reverse();
    let reversed = lines.join("\n") + "\n";

    let input = dir.path().join("scrambled.jsonl");
    std::fs::write(&input, &reversed).unwrap();
    let input_arg = input.display().to_string();
    let out = dir.path().join("canonical.jsonl");
    let out_arg = out.display().to_string();

    let summary = ok_stdout(&[
        "convert-metrics",
        &input_arg,
        "--index",
        &index,
        "--out",
        &out_arg,
    ]);
    assert_eq!(
        String::from_utf8(summary).unwrap(),
        "validated 84 records covering 7 cells\n"
    );
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        forward,
        "rewrite must restore canonical order"
    );

    // An out-of-range accuracy must be refused, naming the field.
    let mut patched: Vec<String> = forward.lines().map(str::to_owned).collect();
    let mut record: serde_json::Value = serde_json::from_str(&patched[5]).unwrap();
    record["valid_acc"] = serde_json::json!(1.5);
    patched[5] = record.to_string();
    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, patched.join("\n") + "\n").unwrap();
    let corrupt_arg = corrupt.display().to_string();

    let refusal = assert_one_error_line(&["convert-metrics", &corrupt_arg, "--index", &index]);
    assert!(refusal.contains("valid_acc"), "{refusal}");

    // Dropping a record is a coverage error, not a parse error.
    let short = forward.lines().skip(1).collect::<Vec<_>>().join("\n") + "\n";
    let gap = dir.path().join("gap.jsonl");
    std::fs::write(&gap, short).unwrap();
    let gap_arg = gap.display().to_string();
    let refusal = assert_one_error_line(&["convert-metrics", &gap_arg, "--index", &index]);
    assert!(refusal.contains("missing"), "{refusal}");
}

#[test]
fn stdout_and_file_output_match_across_jobs() {
    let dir = TempDir::new().unwrap();
    let index = index_arg();

    for case in [
        vec!["analyze", "depthwidth", "--oracle", "synthetic:seed=5"],
        vec![
            "bench", "--algo", "hb", "--runs", "6", "--budget", "1e6", "--seed", "3", "--oracle",
            "synthetic:seed=5",
        ],
    ] {
        let mut streamed = case.clone();
        streamed.extend(["--index", &index, "--jobs", "1"]);
        let stdout = ok_stdout(&streamed);

        let path = dir.path().join("payload.csv");
        let path_arg = path.display().to_string();
        let mut written = case.clone();
        written.extend(["--index", &index, "--jobs", "2", "--out", &path_arg]);
        assert!(run(&written).status.success());

        assert_eq!(
            stdout,
            std::fs::read(&path).unwrap(),
            "{case:?} must not depend on destination or worker count"
        );
    }
}

#[test]
fn index_path_comes_from_the_environment_when_not_flagged() {
    let index = index_arg();
    let flagged = ok_stdout(&["stats", "--index", &index]);
    let via_env = run_with_env(&["stats"], Some(mini_index()));
    assert!(via_env.status.success());
    assert_eq!(flagged, via_env.stdout);

    // The flag wins over the environment.
    let bogus = run_with_env(
        &["stats", "--index", "/no/such/index.space"],
        Some(mini_index()),
    );
    assert!(!bogus.status.success());
}

#[test]
fn help_pins_the_documented_defaults() {
    let bench = String::from_utf8(ok_stdout(&["bench", "--help"])).unwrap();
    for needle in [
        "[default: 500]",        // runs
        "[default: 10000000]",   // simulated-seconds budget
        "[default: 100]",        // population size
        "[default: 10]",         // tournament size
        "[default: 0.5]",        // learning rate
        "[default: 3]",          // halving eta
    ] {
        assert!(bench.contains(needle), "bench --help lost {needle}:\n{bench}");
    }

    let volume = String::from_utf8(ok_stdout(&["analyze", "volume", "--help"])).unwrap();
    assert!(volume.contains("[default: 200000]"), "{volume}");
    assert!(volume.contains("[default: 6]"), "{volume}");

    let enumerate = String::from_utf8(ok_stdout(&["enumerate", "--help"])).unwrap();
    assert!(enumerate.contains("[default: 7]"), "{enumerate}");
    assert!(enumerate.contains("[default: 9]"), "{enumerate}");

    let stats = String::from_utf8(ok_stdout(&["stats", "--help"])).unwrap();
    assert!(stats.contains("[env: NASBENCH_INDEX"), "{stats}");
}

#[test]
fn every_text_output_ends_with_a_newline() {
    let index = index_arg();
    let index = index.as_str();
    for case in [
        vec!["stats", "--index", index],
        vec!["params", "--spec", TRIVIAL],
        vec![
            "query", "--spec", TRIVIAL, "--oracle", "synthetic:seed=1", "--index", index,
        ],
        vec!["analyze", "ecdf", "--oracle", "synthetic:seed=1", "--index", index],
        vec![
            "analyze", "rankcorr", "--oracle", "synthetic:seed=1", "--index", index,
        ],
    ] {
        let bytes = ok_stdout(&case);
        assert_eq!(bytes.last(), Some(&b'\n'), "{case:?} must end with LF");
        assert!(!bytes.contains(&b'\r'), "{case:?} must be LF-only");
    }
}
