//! End-to-end behavior of the command-line surface: exit codes, JSON output
//! shapes, the budget override, and the witness round trip.

use std::path::Path;

use ck_cli::{run, EXIT_BUDGET, EXIT_FAIL, EXIT_INPUT, EXIT_PASS, EXIT_UNSUPPORTED};
use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["ck".to_owned()];
    argv.extend(args.iter().map(|s| (*s).to_owned()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(&argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

fn emit_fixtures(dir: &Path) {
    let (code, _, _) = cli(&["fixtures", "--emit", dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(format!("{name}.json"))
        .to_str()
        .unwrap()
        .to_owned()
}

#[test]
fn check_exit_codes_follow_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let lost_update = path(dir.path(), "lost-update");
    let (code, out, _) = cli(&["check", "ser", &lost_update]);
    assert_eq!(code, EXIT_FAIL);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["verdict"], "non-member");
    let (code, out, _) = cli(&["check", "cc", &lost_update]);
    assert_eq!(code, EXIT_PASS);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["verdict"], "member");
    assert!(v["witness"]["vis"].is_array());
}

#[test]
fn witness_round_trips_through_graphof_and_check() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let graph = path(dir.path(), "long-fork-graph");
    let (code, out, _) = cli(&["witness", "psi", &graph]);
    assert_eq!(code, EXIT_PASS);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    let witness = v["witness"].to_string();
    let witness_path = dir.path().join("witness.json");
    std::fs::write(&witness_path, &witness).unwrap();

    // The witness validates, its graph is the input graph, and the history
    // checks back as a PSI member.
    let (code, _, _) = cli(&["validate", witness_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    let (code, out, _) = cli(&["graphof", witness_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    let roundtrip: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    let original: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("long-fork-graph.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(roundtrip["wr"], original["wr"]);
    assert_eq!(roundtrip["ww"], original["ww"]);
    assert_eq!(roundtrip["rw"], original["rw"]);
    let (code, _, _) = cli(&["check", "psi", witness_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
}

#[test]
fn both_engines_agree_on_history_membership() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    for (fixture, model, expected) in [
        ("lost-update", "psi", EXIT_FAIL),
        ("lost-update", "cc", EXIT_PASS),
        ("write-skew", "si", EXIT_PASS),
        ("write-skew", "ser", EXIT_FAIL),
    ] {
        let file = path(dir.path(), fixture);
        for engine in ["oracle", "solver"] {
            let (code, _, _) = cli(&["check", model, &file, "--engine", engine]);
            assert_eq!(code, expected, "{fixture} under {model} via {engine}");
        }
    }
}

#[test]
fn witness_reports_cycle_on_non_member() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let graph = path(dir.path(), "fig1-graph");
    let (code, out, _) = cli(&["witness", "ser", &graph, "--pretty"]);
    assert_eq!(code, EXIT_FAIL);
    let first = out.lines().next().unwrap();
    let v: Value = serde_json::from_str(first).unwrap();
    assert_eq!(v["verdict"], "non-member");
    let cycle = v["cycle"].as_array().unwrap();
    assert!(!cycle.is_empty());
    // Quadruples [from, kind, object, to].
    assert_eq!(cycle[0].as_array().unwrap().len(), 4);
    assert!(out.lines().nth(1).unwrap().starts_with("cycle:"));
}

#[test]
fn solver_refuses_non_simple_models_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let graph = path(dir.path(), "appd-incompleteness");
    for model in ["si+ser", "cp"] {
        let (code, _, err) = cli(&["witness", model, &graph]);
        assert_eq!(code, EXIT_UNSUPPORTED, "model {model}");
        let v: Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
        assert_eq!(v["code"], "unsupported");
    }
}

#[test]
fn malformed_input_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let (code, _, err) = cli(&["check", "cc", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("parse-error"));
    let (code, _, _) = cli(&["check", "zz", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn budget_override_gives_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let long_fork = path(dir.path(), "long-fork");
    // Five transactions exceed a budget of two; the oracle refuses upfront.
    // Run the real binary so the environment override cannot race with the
    // other tests in this process.
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_ck"))
        .args(["check", "cc", &long_fork, "--engine", "oracle"])
        .env("CK_BUDGET", "2")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_BUDGET));
    assert!(String::from_utf8_lossy(&output.stderr).contains("budget-exceeded"));
}

#[test]
fn enumerate_streams_valid_executions() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let write_skew = path(dir.path(), "write-skew");
    let (code, out, _) = cli(&["enumerate", &write_skew]);
    assert_eq!(code, EXIT_PASS);
    let lines: Vec<&str> = out.lines().collect();
    assert!(!lines.is_empty());
    for line in &lines {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["vis"].is_array() && v["ar"].is_array());
    }
}

#[test]
fn audit_laws_reports_by_law_id() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let execution = path(dir.path(), "fig1-execution");
    let (code, out, _) = cli(&["audit-laws", &execution, "--model", "cc"]);
    assert_eq!(code, EXIT_PASS);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    for id in ["a.1", "b.3", "c.7", "c.12"] {
        assert_eq!(v["laws"][id], "pass", "law {id}");
    }
}

#[test]
fn audit_laws_with_sessions_uses_the_extended_law_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("session-exec.json");
    std::fs::write(
        &file,
        r#"{"transactions":[
            {"id":"t1","ops":[{"kind":"write","obj":"x","val":1}]},
            {"id":"t2","ops":[{"kind":"read","obj":"x","val":1}]}],
            "sessions":[["t1","t2"]],
            "vis":[["t1","t2"]],
            "ar":[["t1","t2"]]}"#,
    )
    .unwrap();
    let (code, out, _) = cli(&["audit-laws", file.to_str().unwrap(), "--model", "cc"]);
    assert_eq!(code, EXIT_PASS, "output: {out}");
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["laws"]["e.1"], "pass");
    assert_eq!(
        v["laws"]["c.4"], "pass",
        "full causality is part of the lifted model"
    );
}

#[test]
fn validate_reports_violations_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.json");
    std::fs::write(
        &file,
        r#"{"transactions":[{"id":"t","ops":[{"kind":"read","obj":"x","val":0},{"kind":"read","obj":"x","val":1}]}]}"#,
    )
    .unwrap();
    let (code, out, _) = cli(&["validate", file.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAIL);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["valid"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn robust_certifies_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    emit_fixtures(dir.path());
    let (code, _, _) = cli(&["robust", "si", &path(dir.path(), "write-skew-graph")]);
    assert_eq!(code, EXIT_PASS);
    let (code, out, _) = cli(&["robust", "ser", &path(dir.path(), "write-skew-graph")]);
    assert_eq!(code, EXIT_FAIL);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["verdict"], "not-certified");
    // CCSER reports both the fenced criterion and its strengthening.
    let (_, out, _) = cli(&[
        "robust",
        "ccser",
        &path(dir.path(), "serialisable-lost-update-graph"),
    ]);
    let v: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["criteria"].as_array().unwrap().len(), 2);
}

#[test]
fn help_mentions_budget_env() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("CK_BUDGET"));
}
