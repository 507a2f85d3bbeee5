//! End-to-end runs of the `opt` binary on the fixture corpus.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Exit code, raw standard output and its JSON.
fn opt(args: &[&str]) -> (i32, String, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_opt")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), stdout, json)
}

#[test]
fn plus_state_distribution() {
    let (code, raw, _) = opt(&["prob", &fixture("plus_computational.opt"), "--test-circuit", "c"]);
    assert_eq!(code, 0);
    assert_eq!(raw.trim(), r#"{"0":0.5,"1":0.5}"#);
}

#[test]
fn classical_mixed_state_has_no_purification() {
    let (code, _, v) = opt(&["audit", &fixture("classical_mixed.opt"), "--axiom", "purification"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "Violated");
    assert_eq!(v["witness"]["state"], "coin");
    assert_eq!(v["witness"]["witness"]["support"], serde_json::json!([0, 1]));
    let (code, _, v) = opt(&["purify", &fixture("classical_mixed.opt"), "--state", "heads"]);
    assert_eq!(code, 0);
    assert_eq!(v["purification"]["purifying_system"], "I");
}

#[test]
fn identity_summing_instruments_pass_niwd() {
    for f in ["niwd_weights.opt", "niwd_phases.opt"] {
        let (code, _, v) = opt(&["audit", &fixture(f), "--axiom", "niwd"]);
        assert_eq!(code, 0, "{f}");
        assert_eq!(v["verdict"], "Holds");
    }
    let (code, _, v) = opt(&["audit", &fixture("classical_readout.opt"), "--axiom", "niwd"]);
    assert_eq!(code, 1);
    assert_eq!(v["tests"][0]["report"]["verdict"]["branch"], 0);
}

#[test]
fn local_tomography_verdicts() {
    let (code, _, v) = opt(&["audit", &fixture("real_rebits.opt"), "--axiom", "local-tomography"]);
    assert_eq!(code, 1);
    assert_eq!(v["pairs"][0]["result"]["dim_product"], 9);
    assert_eq!(v["pairs"][0]["result"]["dim_joint"], 10);
    let (code, _, v) = opt(&["audit", &fixture("bell.opt"), "--axiom", "local-tomography"]);
    assert_eq!(code, 0);
    assert_eq!(v["pairs"][0]["result"]["dim_joint"], 16);
    let (code, _, _) = opt(&["audit", &fixture("bit_flip_pair.opt"), "--axiom", "local-tomography"]);
    assert_eq!(code, 0);
}

#[test]
fn equivalence_and_distinction() {
    let (code, _, v) = opt(&["equiv", &fixture("hadamard_pair.opt"), "--box", "hzh", "--box2", "x"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["verdict"], "Equivalent");
    let (code, _, v) = opt(&["equiv", &fixture("bit_flip_pair.opt"), "--box", "keep", "--box2", "flip"]);
    assert_eq!(code, 1);
    assert_eq!(v["report"]["witness"]["gap"], 1.0);
    // agree on the rebit alone, separated with a reference rebit
    let (code, _, v) = opt(&["equiv", &fixture("real_counterexample.opt"), "--box", "mix", "--box2", "depol"]);
    assert_eq!(code, 1);
    assert_eq!(v["report"]["witness"]["reference"], "R");
}

#[test]
fn dilation_and_steering() {
    let (code, _, v) = opt(&["dilate", &fixture("depolarizing.opt"), "--box", "depol"]);
    assert_eq!(code, 0);
    assert_eq!(v["dilation"]["environment"], "@4");
    let (code, _, v) = opt(&["dilate", &fixture("bit_flip_pair.opt"), "--box", "noisy"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "Failure");
    let (code, _, v) = opt(&["steer", &fixture("maximally_mixed.opt"), "--state", "mixed", "--test", "z"]);
    assert_eq!(code, 0);
    assert!(v["steering"]["reproduction_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["labels"], serde_json::json!(["down", "up"]));
}

#[test]
fn causality_and_faithfulness_audits() {
    let (code, _, v) = opt(&["audit", &fixture("instrument.opt"), "--axiom", "causality"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["product_rule_exact"], true);
    let (code, _, v) = opt(&["audit", &fixture("incomplete_test.opt"), "--axiom", "causality"]);
    assert_eq!(code, 1);
    assert_eq!(v["witness"]["test"], "half");
    let (code, _, v) = opt(&["audit", &fixture("bell.opt"), "--axiom", "faithfulness", "--trials", "30"]);
    assert_eq!(code, 0);
    assert_eq!(v["systems"][0]["report"]["trials"], 30);
}

#[test]
fn eval_reports_transfer_matrices() {
    let (code, _, v) = opt(&["eval", &fixture("amplitude_damping.opt"), "--circuit", "p"]);
    assert_eq!(code, 0);
    assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let (code, _, v) = opt(&["eval", &fixture("plus_computational.opt"), "--circuit", "c"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "UsageError");
}

#[test]
fn errors_exit_two_with_location() {
    let dir = std::env::temp_dir().join(format!("opt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.opt");
    std::fs::write(&bad, "theory quantum\nsystem q dim=2\nbox t : q -> q = choi=[[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]\n").unwrap();
    let (code, _, v) = opt(&["audit", bad.to_str().unwrap(), "--axiom", "causality"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "NotPhysical");
    assert_eq!(v["line"], 3);
    std::fs::write(&bad, "theory quantum\nsystem q dim=2\ncircuit c = id(q) ;\n").unwrap();
    let (code, _, v) = opt(&["eval", bad.to_str().unwrap(), "--circuit", "c"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "SyntaxError");
    assert_eq!(v["line"], 3);
    let (code, _, _) = opt(&["audit", &fixture("bell.opt"), "--axiom", "nonsense"]);
    assert_eq!(code, 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["audit", &fixture("qutrit_mixed.opt"), "--axiom", "faithfulness", "--seed", "9", "--trials", "25"];
    let (_, first, _) = opt(&args);
    let (_, second, _) = opt(&args);
    assert_eq!(first, second);
    let (_, other, _) = opt(&["audit", &fixture("qutrit_mixed.opt"), "--axiom", "faithfulness", "--seed", "10", "--trials", "25"]);
    assert_ne!(first, other);
}
