use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn capgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capgate"))
        .args(args)
        .env_remove("CAPGATE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("json error on stderr")
}

fn without_timestamps(mut v: Value) -> Value {
    match &mut v {
        Value::Object(map) => {
            map.remove("timestamp");
            for (_, child) in map.iter_mut() {
                *child = without_timestamps(child.take());
            }
        }
        Value::Array(items) => {
            for child in items.iter_mut() {
                *child = without_timestamps(child.take());
            }
        }
        _ => {}
    }
    v
}

fn synth_file(dir: &Path, seed: &str, dims: &str) -> String {
    let path = dir.join("data.csv");
    let p = path.to_str().unwrap().to_string();
    let out = capgate(&[
        "synth",
        "--seed",
        seed,
        "--dimensions",
        dims,
        "--format",
        "csv",
        "--out",
        &p,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    p
}

#[test]
fn decide_lambda_maps_to_cost_sensitive() {
    let out = capgate(&[
        "decide",
        "--lambda",
        "19",
        "--c0",
        "1.33",
        "--values",
        "9.9,10.1,10.0,10.2,9.8,10.05",
        "--lsl",
        "9",
        "--usl",
        "11",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["rule"], "lambda(19)");
    assert_eq!(row["alpha"], 0.05);
    assert!((row["k"].as_f64().unwrap() - 1.6449).abs() < 1e-3);
    assert_eq!(v["manifest"]["config"]["rule"]["rule"], "cost_sensitive");
}

#[test]
fn conflicting_rules_are_a_usage_error() {
    let out = capgate(&[
        "decide", "--lambda", "19", "--alpha", "0.05", "--values", "1,2", "--lsl", "0", "--usl",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = capgate(&["decide", "--values", "1,2", "--lsl", "0", "--usl", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unparseable_number_is_a_usage_error() {
    let out = capgate(&["estimate", "--values", "1,x", "--lsl", "0", "--usl", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plain_values_need_limits() {
    let out = capgate(&["estimate", "--values", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_sample_is_degenerate() {
    let out = capgate(&[
        "estimate", "--values", "5,5,5,5", "--lsl", "0", "--usl", "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "DegenerateSample");
}

#[test]
fn estimate_from_plain_column_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    fs::write(&path, "value\n9.9\n10.1\n10.0\n10.2\n9.8\n").unwrap();
    let out = capgate(&[
        "estimate",
        "--input",
        path.to_str().unwrap(),
        "--lsl",
        "9",
        "--usl",
        "11",
    ]);
    assert!(out.status.success());
    let cpk = stdout_json(&out)["rows"][0]["cpk_hat"].as_f64().unwrap();
    assert!((cpk - 2.108185).abs() < 1e-6);
}

#[test]
fn batch_over_synthetic_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), "11", "40");
    let report = dir.path().join("report.json");
    let out = capgate(&[
        "batch",
        "--seed",
        "11",
        "--input",
        &data,
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for key in [
        "run_config",
        "assessments",
        "reclassification",
        "empirical_risk",
        "exceptions",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["assessments"].as_array().unwrap().len(), 40);
    assert_eq!(v["run_config"]["seed"], 11);
    for row in v["reclassification"]["overall"]["rows"].as_array().unwrap() {
        assert_eq!(row["reject_to_accept"], 0);
    }
}

#[test]
fn batch_flat_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), "2", "10");
    let out = capgate(&[
        "batch",
        "--input",
        &data,
        "--format",
        "csv",
        "--lambdas",
        "1,10",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "dimension_id,n,cpk_hat,se,p_fail,method,normal,baseline_accept,accept_l1,accept_l10\n"
    ));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn batch_rejects_inverted_limits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "dimension_id,lsl,usl,value\nA,1.0,0.5,0.7\nA,1.0,0.5,0.8\n",
    )
    .unwrap();
    let out = capgate(&["batch", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "ConsistencyError");
}

#[test]
fn malformed_row_reports_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "dimension_id,lsl,usl,value\nA,0,1,0.5\nA,0,1,oops\n").unwrap();
    let out = capgate(&["batch", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "ParseError");
    assert!(err["message"].as_str().unwrap().contains('3'));
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let a = capgate(&[
        "synth",
        "--seed",
        "5",
        "--dimensions",
        "25",
        "--format",
        "csv",
    ]);
    let b = capgate(&[
        "synth",
        "--seed",
        "5",
        "--dimensions",
        "25",
        "--format",
        "csv",
    ]);
    let c = capgate(&[
        "synth",
        "--seed",
        "6",
        "--dimensions",
        "25",
        "--format",
        "csv",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn batch_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), "4", "30");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_capgate"))
            .args(["batch", "--seed", "4", "--input", &data])
            .env("CAPGATE_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        without_timestamps(stdout_json(&out))
    };
    assert_eq!(run("1"), run("4"));
    assert_eq!(run("0"), run("1"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_capgate"))
        .args(["simulate", "--table1"])
        .env("CAPGATE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table1_preset() {
    let out = capgate(&["simulate", "--table1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("lambda,alpha,k"));
    assert!(text.contains("19.0,0.05,1.644853"));
}

#[test]
fn table2_preset_writes_directory() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let r = runs.to_str().unwrap();
    let out = capgate(&[
        "simulate", "--table2", "--seed", "7", "--out", r, "--format", "csv",
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(runs.join("table2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(runs.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["context"]["replications"], 12000);

    // same seed, same numbers
    let again = dir.path().join("again");
    capgate(&[
        "simulate",
        "--table2",
        "--seed",
        "7",
        "--out",
        again.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(csv, fs::read_to_string(again.join("table2.csv")).unwrap());
}

#[test]
fn boundary_preset_is_near_target() {
    let out = capgate(&["simulate", "--boundary"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    for row in v["rows"].as_array().unwrap() {
        let p = row["p_acc"].as_f64().unwrap();
        let t = row["target"].as_f64().unwrap();
        assert!((p - t).abs() < 0.03, "{row}");
    }
}

#[test]
fn custom_grid_surface() {
    let out = capgate(&[
        "simulate",
        "--cpk-from",
        "1.0",
        "--cpk-to",
        "1.6",
        "--cpk-step",
        "0.1",
        "--n",
        "32",
        "--lambdas",
        "1,10",
        "--replications",
        "500",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    // 7 capability levels x (deterministic + 2 cost-sensitive)
    assert_eq!(v["cells"].as_array().unwrap().len(), 21);
    assert_eq!(v["contours"].as_array().unwrap().len(), 3);
}
