use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ccb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// The knapsack preset cut down to three short horizons and five seeds.
fn small_config(dir: &Path) -> String {
    let text = stdout(&ccb(&["preset", "cbwk"]));
    let mut config: Value = serde_json::from_str(&text).unwrap();
    config["horizons"] = serde_json::json!([64, 128, 256]);
    config["seeds"] = serde_json::json!([0, 1, 2, 3, 4]);
    let path = dir.join("small.json");
    std::fs::write(&path, config.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn igw_check_passes() {
    let out = ccb(&["check-lemma1", "--trials", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let slack: f64 = text.split_whitespace().nth(4).unwrap().parse().unwrap();
    assert!(slack >= -1e-9, "{text}");
}

#[test]
fn surrogate_check_passes() {
    let out = ccb(&["check-surrogate", "--trials", "20000", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn zero_horizon_run_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = ccb(&[
        "--preset",
        "feasible_expectation",
        "--out",
        out_dir,
        "run",
        "--horizon",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("rounds.csv")).unwrap();
    assert_eq!(
        csv,
        "t,context,action,reward,cost_1,Q_1,z_t,gamma_t,sqerr_f,sqerr_g_1,surrogate_slack\n"
    );
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    for key in ["opt", "regret", "ccv", "reward"] {
        assert_eq!(summary[key].as_f64(), Some(0.0), "{key}");
    }
    assert_eq!(summary["schema_version"], 1);
}

#[test]
fn run_writes_one_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = ccb(&[
        "--preset",
        "cbwlc",
        "--seed",
        "3",
        "--out",
        out_dir,
        "run",
        "--horizon",
        "500",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("rounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 501);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["horizon"], 500);
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out_dir = dir.path().join(name);
        let out = ccb(&[
            "--config",
            &config,
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
            "sweep",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read(out_dir.join("sweep.csv")).unwrap();
        let summary = std::fs::read(out_dir.join("sweep_summary.json")).unwrap();
        assert_eq!(csv.iter().filter(|&&b| b == b'\n').count(), 16);
        outputs.push((csv, summary));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn sweep_needs_enough_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&ccb(&["preset", "slater"]));
    let mut config: Value = serde_json::from_str(&text).unwrap();
    config["seeds"] = serde_json::json!([0, 1]);
    let path = dir.path().join("few.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = ccb(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "sweep",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn benchmark_is_certified() {
    let out = ccb(&["--preset", "almost_sure", "solve-benchmark"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["certificate"]["verified"], true);
    assert_eq!(report["contexts"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_report_has_aggregation_bound() {
    let out = ccb(&[
        "--preset",
        "feasible_expectation",
        "--seed",
        "2",
        "verify-oracle",
        "--horizon",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let excess = report["aggregation_excess"].as_f64().unwrap();
    let bound = report["aggregation_bound"].as_f64().unwrap();
    assert!(excess <= bound);
}

#[test]
fn input_errors_exit_with_one() {
    assert_eq!(ccb(&["--bogus", "run"]).status.code(), Some(1));
    assert_eq!(ccb(&["run"]).status.code(), Some(1));
    assert_eq!(
        ccb(&["--config", "/nonexistent/config.json", "run"]).status.code(),
        Some(1)
    );
    assert_eq!(ccb(&["preset", "nope"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1}").unwrap();
    assert_eq!(ccb(&["--config", bad.to_str().unwrap(), "run"]).status.code(), Some(1));

    let text = stdout(&ccb(&["preset", "cbwk"]));
    let mut config: Value = serde_json::from_str(&text).unwrap();
    config["schema_version"] = serde_json::json!(99);
    std::fs::write(&bad, config.to_string()).unwrap();
    let out = ccb(&["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn help_exits_cleanly() {
    let out = ccb(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("solve-benchmark"));
}
