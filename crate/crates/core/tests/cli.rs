use std::path::PathBuf;
use std::process::{Command, Output};

use coherence_lab::io::parse_instance;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analyze_e1_reports_full_with_prior() {
    let path = data("e1.json");
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let t = text(&out);
    assert!(t.contains("Grade: FULL"), "{t}");
    assert!(t.contains("SEU prior:"));
    assert!(t.contains("3/10") && t.contains("7/10"));

    let r = json(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(r["schema"], "coherence-lab/1");
    assert_eq!(r["report"]["grade"], "FULL");
    assert_eq!(r["report"]["representations"]["seu"]["prior"]["w1"], "3/10");
    assert_eq!(r["report"]["representations"]["seu"]["prior"]["w2"], "7/10");
}

#[test]
fn analyze_e3_serializes_prior_set() {
    let path = data("e3.json");
    let r = json(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    let report = &r["report"];
    assert_eq!(report["grade"], "THETA1");
    assert_eq!(report["ladder"]["THETA0"]["holds"], true);
    assert_eq!(report["ladder"]["FULL"]["holds"], false);
    let vertices = &report["representations"]["meu"]["vertices"];
    assert_eq!(vertices, &serde_json::json!([["3/10", "7/10"], ["7/10", "3/10"]]));
}

#[test]
fn analyze_e2_renders_the_violation_table() {
    let out = run(&["analyze", data("e2.json").to_str().unwrap()]);
    let t = text(&out);
    assert!(t.contains("theta = 1/2·δ[f] + 1/2·δ[g]"), "{t}");
    assert!(t.contains("u(theta|w)"));
    assert!(t.contains("value(eta) - value(theta) = 3/20"));
}

#[test]
fn broken_input_exits_2_with_position() {
    let out = run(&["validate", data("broken.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 26, column 13"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn decimal_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decimal.json");
    let e1 = std::fs::read_to_string(data("e1.json")).unwrap();
    std::fs::write(&path, e1.replace("\"3/10\"", "\"0.3\"")).unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line"));
}

#[test]
fn json_output_is_byte_deterministic() {
    for name in ["e1.json", "e2.json", "e3.json", "e4.json"] {
        let path = data(name);
        let args = ["analyze", path.to_str().unwrap(), "--format", "json", "--seed", "5"];
        assert_eq!(run(&args).stdout, run(&args).stdout, "{name}");
    }
}

#[test]
fn instance_echo_round_trips() {
    for name in ["e1.json", "e3.json", "e4.json"] {
        let path = data(name);
        let r = json(&["analyze", path.to_str().unwrap(), "--format", "json"]);
        let echo = serde_json::to_string(&r["report"]["instance"]).unwrap();
        let original = parse_instance(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse_instance(&echo).unwrap(), original, "{name}");
    }
}

#[test]
fn strict_turns_negative_verdicts_into_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let e1 = std::fs::read_to_string(data("e1.json")).unwrap();
    // f above ybar breaks even simple coherence.
    std::fs::write(&path, e1.replace("\"3/10\"", "\"2\"")).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["analyze", p]).status.code(), Some(0));
    assert_eq!(run(&["analyze", p, "--strict"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", data("e1.json").to_str().unwrap(), "--strict"]).status.code(), Some(0));
}

#[test]
fn arbitrage_and_repair_reports() {
    let e3 = data("e3.json");
    let r = json(&["arbitrage", e3.to_str().unwrap(), "--format", "json"]);
    assert_eq!(r["report"]["ok"], true);
    let r = json(&["repair", e3.to_str().unwrap(), "--format", "json"]);
    assert_eq!(r["report"]["status"], "repaired");
}

#[test]
fn capacity_commands() {
    let cap = data("squared_thirds.json");
    let r = json(&["capacity", cap.to_str().unwrap(), "--format", "json"]);
    assert_eq!(r["report"]["convex"], true);
    assert_eq!(r["report"]["core"]["vertices"].as_array().unwrap().len(), 6);
    let r = json(&["choquet", cap.to_str().unwrap(), "--profile", "1,1/2,0", "--format", "json"]);
    assert_eq!(r["report"]["choquet"], "5/18");
    assert_eq!(r["report"]["grid"]["value"], "5/18");
    let r = json(&["submeasure", cap.to_str().unwrap(), "--format", "json"]);
    assert!(r["report"]["submeasure"].is_object());
}

#[test]
fn infeasible_submeasure_exits_3_with_dump() {
    let out = run(&["submeasure", data("two_null_atoms.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("internal contradiction: no order-equivalent"), "{err}");
    assert!(err.contains("input for reproduction"));
}

#[test]
fn bad_profile_is_an_input_error() {
    let cap = data("squared_thirds.json");
    let out = run(&["choquet", cap.to_str().unwrap(), "--profile", "1,x,0"]);
    assert_eq!(out.status.code(), Some(2));
}
