use std::path::Path;
use std::process::{Command, Output};

fn bcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcov")).args(args).env_remove("BCOV_THREADS").output().expect("spawn bcov")
}

fn obstructed() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/obstructed.json").display().to_string()
}

#[test]
fn validate_zoo_model() {
    let out = bcov(&["validate", "--model", "zoo:twostep-del"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["kahler"], "ok");
}

#[test]
fn broken_model_exits_with_axiom_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    let text = std::fs::read_to_string(obstructed())
        .unwrap()
        .replace(r#"["e2", "e1", "e3", "-1"]"#, r#"["e2", "e1", "e3", "1"]"#);
    std::fs::write(&path, text).unwrap();
    let out = bcov(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graded-commutativity"));
}

#[test]
fn obstruction_exits_with_code_three_and_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = bcov(&["axioms", "--model", &obstructed(), "--order", "4", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["halted"]["stage"], "mc");
    assert!(v["hodge"].is_object());
}

#[test]
fn usage_errors_exit_with_code_four() {
    assert_eq!(bcov(&["f0", "--model", "zoo:nosuch"]).status.code(), Some(4));
    assert_eq!(bcov(&["f0", "--model", "zoo:torus(1)", "--order", "0"]).status.code(), Some(4));
    assert_eq!(bcov(&["f0"]).status.code(), Some(4));
    assert_eq!(bcov(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(bcov(&["f0", "--model", "/nonexistent/model.json"]).status.code(), Some(4));
}

#[test]
fn compare_reports_zero_diffs() {
    let out = bcov(&["compare", "--model", "zoo:twostep-del", "--order", "4", "--tmax", "1", "--descendants"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["equivalence"]["all_zero"], true);
    assert_eq!(v["equivalence"]["trees_vs_hpl"], serde_json::json!([]));
}

#[test]
fn f0_single_method_omits_the_other() {
    let out = bcov(&["f0", "--model", "zoo:cy3-toy", "--order", "4", "--method", "trees"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["f0"]["trees"].is_array());
    assert!(v["f0"].get("hpl").is_none());
    assert!(v.get("mc").is_none());
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let run = |threads: &str| {
        let out = bcov(&["axioms", "--model", "zoo:twostep-del", "--order", "5", "--tmax", "1", "--threads", threads]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn threads_fall_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_bcov"))
        .args(["mc", "--model", "zoo:torus(1)", "--order", "3"])
        .env("BCOV_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_bcov"))
        .args(["mc", "--model", "zoo:torus(1)", "--order", "3"])
        .env("BCOV_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(4));
}
