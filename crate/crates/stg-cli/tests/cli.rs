//! End-to-end CLI tests: exit codes, pipeline smoke, and JSON output
//! stability across runs and worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stg")
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn validate_shipped_models() {
    for model in ["fig1.json", "sec2-example.json", "unfair-2clock.json", "solver-choice.json"] {
        let path = assets().join(model);
        let out = run(&["validate", "--model", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{model}: {}", stdout(&out));
    }
}

#[test]
fn validate_rejects_broken_model() {
    let dir = tempdir();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"clocks": ["x"], "locations": [], "edges": [],
        "initial": {"location": "A", "valuation": {}}, "targets": []}"#)
        .unwrap();
    let out = run(&["validate", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["validate", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_path_worked_example() {
    let model = assets().join("sec2-example.json");
    let out = run(&["exact-path", "--model", model.to_str().unwrap(), "--path", "e1,e2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("1/8"), "{}", stdout(&out));
}

#[test]
fn regions_rejects_two_clocks() {
    let model = assets().join("unfair-2clock.json");
    let out = run(&["regions", "--model", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_star_verdict_exit_codes() {
    let fig1 = assets().join("fig1.json");
    let out = run(&["check-star", "--model", fig1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // a uniform-distribution mutant fails condition 2 with exit 1
    let dir = tempdir();
    let text = std::fs::read_to_string(&fig1).unwrap();
    let mutant = text.replace(
        r#""A": {"kind": "exponential", "rate": "1"}"#,
        r#""A": {"kind": "uniform"}"#,
    );
    let path = dir.join("mutant.json");
    std::fs::write(&path, mutant).unwrap();
    let out = run(&["check-star", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn abstract_solve_pipeline() {
    let dir = tempdir();
    let mdp = dir.join("fig1-mdp.json");
    let dot = dir.join("fig1-mdp.dot");
    let fig1 = assets().join("fig1.json");
    let out = run(&[
        "abstract",
        "--model",
        fig1.to_str().unwrap(),
        "--out",
        mdp.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("1 - 2*y"));
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    assert!(dot_text.contains("e4e7 : 1 - 2*y"));

    // trivially true threshold -> exit 0
    let out = run(&["solve", "--mdp", mdp.to_str().unwrap(), "--threshold", ">= 0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    // impossible threshold -> exit 1
    let out = run(&["solve", "--mdp", mdp.to_str().unwrap(), "--threshold", "> 1"]);
    assert_eq!(out.status.code(), Some(1), "value 1 is not > 1");
    let out = run(&["solve", "--mdp", mdp.to_str().unwrap(), "--threshold", "< 1/2"]);
    // value at A@0 is 1 (E reached almost surely), so "< 1/2" is false
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
}

#[test]
fn compile_validate_pipeline() {
    let dir = tempdir();
    let model = dir.join("inc-halt.onehalf.json");
    let program = assets().join("inc-halt.tcm");
    let out = run(&[
        "compile-2cm",
        "--program",
        program.to_str().unwrap(),
        "--variant",
        "onehalf",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["validate", "--model", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn run_2cm_trace() {
    let program = assets().join("inc-halt.tcm");
    let out = run(&["run-2cm", "--program", program.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("halted"));
    assert!(text.contains("c1=1"));

    let loop_program = assets().join("loop.tcm");
    let out = run(&["run-2cm", "--program", loop_program.to_str().unwrap(), "--max-steps", "5"]);
    assert!(stdout(&out).contains("truncated"));
}

#[test]
fn json_outputs_are_deterministic_across_worker_counts() {
    let model = assets().join("sec2-example.json");
    let mut outputs = vec![];
    for threads in ["1", "4"] {
        let out = run(&[
            "--output",
            "json",
            "--seed",
            "31",
            "--threads",
            threads,
            "simulate",
            "--model",
            model.to_str().unwrap(),
            "--samples",
            "20000",
        ]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push(stdout(&out));
    }
    assert_eq!(outputs[0], outputs[1], "byte-identical across worker counts");
    let doc: serde_json::Value = serde_json::from_str(&outputs[0]).unwrap();
    for key in ["estimate", "hits", "samples", "ci_low", "ci_high", "seed"] {
        assert!(doc.get(key).is_some(), "stable schema key {key}");
    }
}

#[test]
fn simulate_with_positional_strategy_file() {
    let dir = tempdir();
    let strat = dir.join("choice-b.json");
    std::fs::write(
        &strat,
        r#"{"kind": "positional", "rules": [{"location": "S", "delay": "0", "edge": "b"}]}"#,
    )
    .unwrap();
    let model = assets().join("solver-choice.json");
    let out = run(&[
        "--output",
        "json",
        "--seed",
        "13",
        "simulate",
        "--model",
        model.to_str().unwrap(),
        "--diamond",
        strat.to_str().unwrap(),
        "--samples",
        "40000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let est = doc["estimate"].as_f64().unwrap();
    // optimal branch value 1 - exp(-1) ~ 0.632
    assert!((est - 0.632).abs() < 0.01, "estimate {est}");
}

#[test]
fn gadget_verify_getprob_smoke() {
    let program = assets().join("inc-halt.tcm");
    let out = run(&[
        "--output",
        "json",
        "gadget-verify",
        "--program",
        program.to_str().unwrap(),
        "--variant",
        "onehalf",
        "--gadget",
        "getprob-inc",
        "--epsilon",
        "0.2",
        "--samples",
        "40000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["law_value"].as_f64().unwrap(), 0.42);
    assert_eq!(doc["pass"].as_bool(), Some(true));
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stg-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
