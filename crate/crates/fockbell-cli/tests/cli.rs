//! End-to-end checks of the binary: frozen outputs, exit codes, config
//! merging, and byte-level determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fockbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockbell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = fockbell(args);
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("fockbell-cli-tests");
    fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name)
}

#[test]
fn prob_example_writes_the_frozen_distribution() {
    let out_path = temp_path("dist.csv");
    let out = fockbell(&[
        "prob",
        "--geometry",
        "fig1",
        "--n-alpha",
        "1",
        "--n-beta",
        "1",
        "--zeta",
        "0",
        "--theta",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        text,
        "m1,m2,m3,m4,probability\n\
         0,0,0,2,1.2500000000000000e-1\n\
         0,0,2,0,1.2500000000000000e-1\n\
         0,1,0,1,2.5000000000000000e-1\n\
         0,2,0,0,1.2500000000000000e-1\n\
         1,0,1,0,2.5000000000000000e-1\n\
         2,0,0,0,1.2500000000000000e-1\n"
    );
    fs::remove_file(&out_path).unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "prob", "--n-alpha", "2", "--n-beta", "1", "--zeta", "0.3", "--theta", "0.9",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
    let json_args = [
        "prob", "--n-alpha", "2", "--n-beta", "1", "--zeta", "0.3", "--theta", "0.9",
        "--format", "json",
    ];
    assert_eq!(stdout_of(&json_args), stdout_of(&json_args));
}

#[test]
fn bell_report_contains_the_known_maximum() {
    let text = stdout_of(&["bell", "--n", "2"]);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,m_detected,conditioned,omega_star,q_max,omega_asymptotic,q_asymptotic"
    );
    assert!(text.contains("2.41"), "missing q_max: {text}");
}

#[test]
fn ghz_contradiction_is_a_json_verdict() {
    let text = stdout_of(&["ghz", "--n", "9", "--contradiction"]);
    let v: serde_json::Value = serde_json::from_str(&text).expect("valid json");
    assert_eq!(v["quantum"], 1);
    assert_eq!(v["local_realism"], -1);
    assert_eq!(v["n"], 9);
}

#[test]
fn hardy_row_reports_the_forced_chain() {
    let text = stdout_of(&["hardy", "--n", "6"]);
    let data = text.lines().nth(1).unwrap();
    let cells: Vec<&str> = data.split(',').collect();
    assert_eq!(cells[1], "0-3-3-0");
    assert_eq!(cells[4], "true");
    assert_eq!(cells[6], "true");
    assert_eq!(cells[9], "0.0000000000000000e0");
}

#[test]
fn validate_passes_and_exits_zero() {
    let out = fockbell(&["validate", "--n-max", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.contains(",true,"), "failing check: {line}");
    }
}

#[test]
fn exit_codes_separate_usage_from_domain_errors() {
    // Missing required value: usage.
    assert_eq!(fockbell(&["prob", "--n-beta", "1"]).status.code(), Some(2));
    // Unknown flag: usage (rejected by the parser).
    assert_eq!(fockbell(&["prob", "--bogus"]).status.code(), Some(2));
    // Constraint violations from the library: domain.
    assert_eq!(fockbell(&["ghz", "--n", "4"]).status.code(), Some(1));
    assert_eq!(
        fockbell(&["prob", "--geometry", "fig9", "--n-alpha", "1", "--n-beta", "1"])
            .status
            .code(),
        Some(1)
    );
    // Hardy needs N/2 odd.
    assert_eq!(fockbell(&["hardy", "--n", "4"]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg_path = temp_path("merge.cfg");
    fs::write(
        &cfg_path,
        "# shared run parameters\nn-alpha = 1\nn-beta = 1\nzeta = 0\ntheta = 0\n",
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let from_config = stdout_of(&["prob", "--config", cfg]);
    let from_flags = stdout_of(&[
        "prob", "--n-alpha", "1", "--n-beta", "1", "--zeta", "0", "--theta", "0",
    ]);
    assert_eq!(from_config, from_flags);
    // An explicit flag beats the file.
    let overridden = stdout_of(&["prob", "--config", cfg, "--zeta", "1.1"]);
    assert_ne!(overridden, from_config);
    fs::remove_file(&cfg_path).unwrap();
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let args = [
        "sweep",
        "--target",
        "q",
        "--n-list",
        "2,4",
        "--omega-grid",
        "0.05:1.5:40",
    ];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_fockbell"))
            .args(args)
            .env("FOCKBELL_THREADS", threads)
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn sweep_probability_matches_the_prob_table() {
    // One grid point pinned to the fig1 (1,1) record (1,0,1,0) at zero
    // angles, which the frozen distribution says is exactly 1/4.
    let text = stdout_of(&[
        "sweep",
        "--target",
        "probability",
        "--n-alpha",
        "1",
        "--n-beta",
        "1",
        "--outcome",
        "1,0,1,0",
        "--zeta",
        "0",
        "--theta",
        "0",
    ]);
    assert_eq!(
        text,
        "zeta,theta,probability\n0.0000000000000000e0,0.0000000000000000e0,2.5000000000000000e-1\n"
    );
}

#[test]
fn detection_seeded_jitter_is_reproducible() {
    let args = [
        "detection",
        "--n-alpha",
        "1",
        "--n-beta",
        "1",
        "--sigmas",
        "0,0.8,1.6",
        "--pattern",
        "seeded",
        "--seed",
        "7",
    ];
    let first = stdout_of(&args);
    assert_eq!(first, stdout_of(&args));
    assert_eq!(first.lines().count(), 4);
    assert_eq!(first.lines().nth(1).unwrap(), "0.0000000000000000e0,1.0000000000000000e0");
}

#[test]
fn json_format_emits_an_object_per_outcome() {
    let text = stdout_of(&[
        "prob", "--n-alpha", "1", "--n-beta", "1", "--format", "json",
    ]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).expect("valid json");
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert!(row["probability"].as_f64().unwrap() > 0.0);
        assert!(row["m1"].is_u64());
    }
}

#[test]
fn altstate_phase_distribution_sums_to_one() {
    let text = stdout_of(&[
        "altstate", "--model", "phase", "--n", "3", "--phi0", "0.6", "--zeta", "0.2",
        "--theta", "-0.4",
    ]);
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|line| line.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12, "total {total}");
}
