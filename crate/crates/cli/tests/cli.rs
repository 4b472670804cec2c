use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output};

fn sdeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdeg")).args(args).output().expect("run sdeg")
}

fn record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().expect("one record")).expect("json record")
}

fn config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn cs_check_from_config() {
    let f = config("subcommand = \"cs-check\"\nn = 2\nsamples = 100000\nseed = 7\n");
    let out = sdeg(&["--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = record(&out);
    assert_eq!(r["resolved"], "1");
    assert_eq!(r["estimates"][0]["seed"], 7);
    assert_eq!(r["estimates"][0]["samples"], 100000);
    assert_eq!(r["config"]["n"], 2);
}

#[test]
fn flags_override_config() {
    let f = config("subcommand = \"cs-check\"\nn = 2\nsamples = 1000\n");
    let out = sdeg(&["--config", f.path().to_str().unwrap(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    assert_eq!(r["config"]["n"], 1);
    assert_eq!(r["resolved"], "-1");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let f = config("subcommand = \"cs-check\"\nsamplez = 10\n");
    let out = sdeg(&["--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("samplez"), "{err}");
}

#[test]
fn invalid_values_name_their_field() {
    let out = sdeg(&["cs-check", "--n", "9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n: 9"));
    let out = sdeg(&["cs-check", "--format", "xml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));
    let out = sdeg(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sdeg(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mismatched_subcommands_are_rejected() {
    let f = config("subcommand = \"index\"\n");
    let out = sdeg(&["cs-check", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn degree_circle_runs_are_reproducible() {
    let args = ["degree-circle", "--family", "weierstrass", "--m", "1", "--alpha", "0.6", "--lambda", "0.5"];
    let a = record(&sdeg(&args));
    let b = record(&sdeg(&args));
    assert_eq!(a["resolved"], "1");
    assert_eq!(a["estimates"], b["estimates"]);
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn records_reproduce_from_their_config_echo() {
    let a = record(&sdeg(&["degree-circle", "--family", "power", "--m", "-2", "--k", "2"]));
    let echo = toml::to_string(&toml::Value::try_from(&a["config"]).unwrap()).unwrap();
    let f = config(&echo);
    let b = record(&sdeg(&["--config", f.path().to_str().unwrap()]));
    assert_eq!(a["estimates"], b["estimates"]);
    assert_eq!(b["resolved"], "-2");
}

#[test]
fn unresolved_exits_with_two() {
    // a single eps leaves no extrapolation spread to quote
    let out = sdeg(&["degree-circle", "--family", "power", "--m", "1", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(record(&out)["resolved"], "UNRESOLVED");
}

#[test]
fn index_with_oracle() {
    let out = sdeg(&["index", "--symbol", "power", "--m", "3", "--samples", "100000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = record(&out);
    assert_eq!(r["resolved"], "-3");
    assert_eq!(r["oracle"]["index"], "-3");
    assert_eq!(r["checks"][0]["status"], "pass");
}

#[test]
fn index_precondition_is_an_error() {
    let out = sdeg(&["index", "--symbol", "holder", "--n", "1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn degree_of_identity() {
    let out = sdeg(&["degree", "--family", "identity", "--samples", "200000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = record(&out);
    assert_eq!(r["resolved"], "1");
    assert_eq!(r["estimates"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_output_and_appending() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let p = path.to_str().unwrap();
    for _ in 0..2 {
        let out = sdeg(&["degree-circle", "--m", "2", "--format", "csv", "--out", p]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("subcommand,kind,label"));
    assert!(lines[1].ends_with(",2"));
}

#[test]
fn schatten_and_trace_check() {
    let out = sdeg(&["schatten", "--symbol", "trig", "--degree", "4", "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&out)["checks"][0]["measured"], 8.0);
    let out = sdeg(&["trace-check", "--samples", "10000", "--modes", "64", "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn verify_suite_passes() {
    let out = sdeg(&["verify-suite"]);
    let r = record(&out);
    assert_eq!(out.status.code(), Some(0), "{r}");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn verify_suite_catches_sign_flip() {
    let out = sdeg(&["verify-suite", "--mutation", "sign-flip"]);
    assert_eq!(out.status.code(), Some(1));
    let r = record(&out);
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]["label"].as_str().unwrap().contains("expansion"));
}

#[test]
fn verify_suite_tiny_basis_is_inconclusive_not_wrong() {
    let out = sdeg(&["verify-suite", "--tiny-basis", "true"]);
    assert_eq!(out.status.code(), Some(2));
    let r = record(&out);
    let checks = r["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] != "fail"));
    assert!(checks.iter().any(|c| c["status"] == "inconclusive"));
}

#[test]
fn worker_cap_does_not_change_results() {
    let args = ["index", "--symbol", "u", "--n", "2", "--samples", "20000", "--oracle", "false"];
    let one = Command::new(env!("CARGO_BIN_EXE_sdeg")).args(args).env("SDEG_WORKERS", "1").output().unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_sdeg")).args(args).env("SDEG_WORKERS", "3").output().unwrap();
    assert_eq!(record(&one)["estimates"], record(&three)["estimates"]);
    let bad = Command::new(env!("CARGO_BIN_EXE_sdeg")).args(args).env("SDEG_WORKERS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
