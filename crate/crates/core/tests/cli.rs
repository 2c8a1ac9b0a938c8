use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bohrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bohrlab")).args(args).env_remove("BOHRLAB_CACHE").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lift_then_push_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = r#"{"space":{"dim":2,"q":2.0},"coeffs":[{"n":1,"value":[[1.0,0.0],[0.0,0.0]]},{"n":12,"value":[[0.5,-0.25],[0.0,2.0]]},{"n":997,"value":[[0.0,1.0],[3.0,0.0]]}]}"#;
    let d = write(dir.path(), "d.json", &format!("{input}\n"));
    let lifted = bohrlab(&["lift", "--in", &d]);
    assert!(lifted.status.success());
    let lifted_json: Value = serde_json::from_str(&stdout(&lifted)).unwrap();
    assert_eq!(lifted_json["N"], 168);
    let p = write(dir.path(), "p.json", &stdout(&lifted));
    let pushed = bohrlab(&["push", "--in", &p]);
    assert!(pushed.status.success());
    assert_eq!(stdout(&pushed), format!("{input}\n"));
}

#[test]
fn norm_of_a_two_term_series() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(
        dir.path(),
        "d.json",
        r#"{"space":{"dim":1,"q":2.0},"coeffs":[{"n":2,"value":[[3.0,0.0]]},{"n":3,"value":[[4.0,0.0]]}]}"#,
    );
    let out = bohrlab(&["norm", "--in", &d, "--p", "2"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(bohrlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bohrlab(&["lift", "--in", "/nonexistent/series.json"]).status.code(), Some(2));
    assert_eq!(
        bohrlab(&["abscissa", "--rule", r#"{"kind":"power_decay","theta":1}"#, "--n-max", "64"]).status.code(),
        Some(0)
    );
    // constants far below the truth make the cotype check fail
    let failed = bohrlab(&["verify", "cotype", "--trials", "20", "--cotype-constant", "0.5", "--kahane-constant", "1"]);
    assert_eq!(failed.status.code(), Some(1));
    let report: Value = serde_json::from_str(stdout(&failed).lines().next().unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["worst_trial"]["index"].is_u64());
}

#[test]
fn identical_arguments_give_identical_reports() {
    let args = ["verify", "main-proposition", "--trials", "30", "--seed", "11", "--estimation-trials", "50"];
    let a = bohrlab(&args);
    let b = bohrlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["version"], "bohrlab 0.1.0");
}

#[test]
fn report_summarizes_a_stream() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("all.jsonl");
    let run =
        bohrlab(&["verify", "cotype", "--trials", "10", "--estimation-trials", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let table = bohrlab(&["--format", "table", "report", "--in", out.to_str().unwrap()]);
    assert!(table.status.success());
    let text = stdout(&table);
    assert!(text.starts_with("check"));
    assert!(text.contains("cotype") && text.contains("pass"));
}
