//! End-to-end tests of the `treeck` binary: exit codes, output formats,
//! flags and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn treeck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_success_has_exit_zero() {
    let out = treeck(&["analyze", fixture("z3_z3.tk").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("K0 = Z_3"), "{text}");
    assert!(text.contains("classification:"), "{text}");
}

#[test]
fn two_ended_input_exits_2() {
    let out = treeck(&["analyze", fixture("z2_z2.tk").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("two ends"));
}

#[test]
fn non_malnormal_amalgam_exits_2() {
    let out = treeck(&["analyze", fixture("z4_amalgam.tk").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not malnormal"), "{err}");
}

#[test]
fn syntax_error_exits_3() {
    let out = treeck(&["analyze", fixture("syntax_error.tk").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1:19"), "{err}");
}

#[test]
fn missing_file_exits_3() {
    let out = treeck(&["analyze", "no_such_file.tk"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_output_is_deterministic_modulo_timings() {
    let path = fixture("s3_amalgam.tk");
    let run = || {
        let out = treeck(&["analyze", path.to_str().unwrap(), "--json"]);
        assert_eq!(out.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a["schema"], 1);
    assert_eq!(a["status"], "ok");
    assert_eq!(a["model"]["k_min"], 2);
    assert_eq!(a["alphabet"]["size"], 4);
}

#[test]
fn emit_matrix_includes_rows_and_legend() {
    let out = treeck(&[
        "analyze",
        fixture("star_z2_cubed.tk").to_str().unwrap(),
        "--json",
        "--emit-matrix",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["matrix"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    let letters = v["alphabet"]["letters"].as_array().unwrap();
    assert_eq!(letters.len(), 9);
    assert!(v["k_theory"]["generator_images"].is_array());
}

#[test]
fn emit_ball_prints_dot() {
    let out = treeck(&[
        "analyze",
        fixture("z3_z3.tk").to_str().unwrap(),
        "--emit-ball",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("graph ball {"), "{text}");
    assert!(text.contains("label=\"P\""), "{text}");
}

#[test]
fn k_flag_runs_robustness_check() {
    let out = treeck(&[
        "analyze",
        fixture("z3_z3.tk").to_str().unwrap(),
        "--json",
        "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["model"]["k_used"], 2);
    assert_eq!(v["robustness"]["baseline_k"], 1);
    assert_eq!(v["robustness"]["factors_match"], true);
}

#[test]
fn tree_model_flag_forces_star() {
    let out = treeck(&[
        "analyze",
        fixture("z3_z3.tk").to_str().unwrap(),
        "--json",
        "--tree-model",
        "star",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["model"]["variant"], "star_free_product");
    // Same invariants as the edge model of the same group.
    assert_eq!(v["k_theory"]["k0_invariant_factors"][0], "3");
}

#[test]
fn ball_cap_env_limits_radii() {
    let out = Command::new(env!("CARGO_BIN_EXE_treeck"))
        .args(["analyze", fixture("z3_z3.tk").to_str().unwrap()])
        .env("TREECK_BALL_CAP", "1")
        .output()
        .expect("binary runs");
    // The alphabet needs segments of length k+1 = 2 > 1.
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn max_l1_flag_changes_check_depth() {
    let out = treeck(&[
        "analyze",
        fixture("z3_z3.tk").to_str().unwrap(),
        "--json",
        "--max-l1-check",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["lemma_l1"].as_array().unwrap().len(), 2);
}
