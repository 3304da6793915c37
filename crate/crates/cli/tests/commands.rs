use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn testflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_testflow")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthesizes `name` into `dir` and returns the cut file path.
fn synth(dir: &Path, name: &str) -> PathBuf {
    let cuts = dir.join(format!("{name}.cuts.json"));
    let out = testflow(&["synth", s(&scenario(name)), "--out", s(&cuts)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    cuts
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_a_verified_cut_file() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = json(&synth(dir.path(), "corridor_5"));
    assert_eq!(cuts["bypass_flow"], 0.0);
    assert_eq!(cuts["cuts"].as_array().unwrap().len(), 2);
    assert_eq!(cuts["verification"]["passed"], true);
    assert_eq!(cuts["stats"]["graph_nodes"], 19);
}

#[test]
fn infeasible_scenario_exits_with_two() {
    let out = testflow(&["synth", s(&scenario("key_behind_goal"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("intermediate"));
}

#[test]
fn relaxed_mode_reports_a_profile() {
    let out = testflow(&["synth", s(&scenario("corridor_5")), "--mode", "relaxed", "--lambda-grid", "1,2,5"]);
    assert_eq!(code(&out), 0);
    let sol: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(sol["mode"], "relaxed_iterative");
    // At weight 1 the relaxed tester still trades one unit of bypass for flow.
    assert_eq!(sol["lambda"], 2.0);
    assert_eq!(sol["bypass_flow"], 0.0);
    assert!(!sol["profile"].as_array().unwrap().is_empty());
}

#[test]
fn nominal_corridor_run_satisfies_both_specifications() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = synth(dir.path(), "corridor_5");
    let trace = dir.path().join("trace.jsonl");
    let out = testflow(&["run", s(&scenario("corridor_5")), s(&cuts), "--out", s(&trace)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&trace).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["system_verdict"], "satisfied");
    assert_eq!(summary["test_verdict"], "satisfied");
    assert_eq!(summary["test_escaped"], false);
}

#[test]
fn seeded_random_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = synth(dir.path(), "corridor_7");
    let run = || testflow(&["run", s(&scenario("corridor_7")), s(&cuts), "--agent", "random", "--seed", "7"]).stdout;
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn stale_cut_file_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = synth(dir.path(), "corridor_5");
    let mut edited = json(&scenario("corridor_5"));
    edited["world"]["length"] = 6.into();
    let path = dir.path().join("edited.json");
    std::fs::write(&path, edited.to_string()).unwrap();
    for cmd in ["run", "verify"] {
        let out = testflow(&[cmd, s(&path), s(&cuts)]);
        assert_eq!(code(&out), 2);
        assert!(String::from_utf8_lossy(&out.stderr).contains("graph"));
    }
}

#[test]
fn verify_rejects_an_emptied_cut_set() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = synth(dir.path(), "corridor_5");
    assert_eq!(code(&testflow(&["verify", s(&scenario("corridor_5")), s(&cuts)])), 0);
    let mut sol = json(&cuts);
    sol["cuts"] = Value::Array(vec![]);
    std::fs::write(&cuts, sol.to_string()).unwrap();
    let out = testflow(&["verify", s(&scenario("corridor_5")), s(&cuts)]);
    assert_eq!(code(&out), 2);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bypass_ok"], false);
}

#[test]
fn render_draws_one_frame_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cuts = synth(dir.path(), "beaver_rescue");
    let trace = dir.path().join("trace.jsonl");
    assert_eq!(code(&testflow(&["run", s(&scenario("beaver_rescue")), s(&cuts), "--out", s(&trace)])), 0);
    let steps = std::fs::read_to_string(&trace).unwrap().lines().count() - 2;
    let out = testflow(&["render", s(&scenario("beaver_rescue")), s(&trace)]);
    assert_eq!(code(&out), 0);
    let frames = String::from_utf8(out.stdout).unwrap();
    assert_eq!(frames.lines().filter(|l| l.starts_with("step ")).count(), steps);
}

#[test]
fn relaxed_mode_with_too_small_a_weight_is_rejected() {
    let out = testflow(&["synth", s(&scenario("corridor_5")), "--mode", "relaxed", "--lambda-grid", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&testflow(&["synth"])), 1);
    assert_eq!(code(&testflow(&["frobnicate"])), 1);
    assert_eq!(code(&testflow(&["synth", s(&scenario("corridor_5")), "--threshold", "2"])), 1);
    assert_eq!(code(&testflow(&["synth", "/nonexistent.json"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "extra": 1}"#).unwrap();
    assert_eq!(code(&testflow(&["synth", s(&bad)])), 1);
    assert_eq!(code(&testflow(&["--help"])), 0);
}
