//! End-to-end behavior of the `rsorth` binary: exit codes, error surfacing,
//! the selftest negative control, and noise degradation in the protocol
//! command.

use std::process::{Command, Output};

fn rsorth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsorth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn orthogonalize_prints_residual_and_succeeds() {
    let out = rsorth(&["orthogonalize", "--kind", "aris", "--e0", "1.0", "--seed", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("relative residual"));
    assert!(text.contains("surface sum power"));
}

#[test]
fn orthogonalize_infeasible_surface_fails_with_named_error() {
    let out = rsorth(&[
        "orthogonalize",
        "--kind",
        "aris",
        "--n",
        "2",
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("InfeasibleN"), "stderr was: {err}");
}

#[test]
fn estimate_reports_table_slot_budgets() {
    let aris = rsorth(&["estimate", "--kind", "aris", "--n", "8", "--seed", "2"]);
    assert!(aris.status.success());
    assert!(stdout(&aris).contains("total               18 slots"));

    let fris = rsorth(&["estimate", "--kind", "fris", "--n", "8", "--seed", "2"]);
    assert!(fris.status.success());
    assert!(stdout(&fris).contains("total               14 slots"));
}

#[test]
fn noisy_estimate_degrades_residual() {
    let parse_residual = |text: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with("residual"))
            .and_then(|l| l.split(':').nth(1))
            .map(|v| v.trim().parse().unwrap())
            .expect("residual line")
    };
    let clean = rsorth(&["estimate", "--kind", "aris", "--seed", "3"]);
    let noisy_cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(noisy_cfg.path(), r#"{"n0": 0.01}"#).unwrap();
    let noisy = rsorth(&[
        "estimate",
        "--kind",
        "aris",
        "--seed",
        "3",
        "--config",
        noisy_cfg.path().to_str().unwrap(),
    ]);
    assert!(clean.status.success() && noisy.status.success());
    let r_clean = parse_residual(&stdout(&clean));
    let r_noisy = parse_residual(&stdout(&noisy));
    assert!(
        r_noisy > r_clean,
        "noisy residual {r_noisy} should exceed noiseless {r_clean}"
    );
}

#[test]
fn estimate_json_report_is_parseable() {
    let out = rsorth(&["estimate", "--kind", "fris", "--seed", "4", "--json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["pilot_slots_used"].as_u64(), Some(8));
    assert!(value["h1_hat"].is_array());
}

#[test]
fn selftest_passes_clean_and_fails_corrupted() {
    let clean = rsorth(&["selftest"]);
    assert!(clean.status.success());
    let text = stdout(&clean);
    assert!(text.contains("PASS gradient_fd_aris"));
    assert!(!text.contains("FAIL"));

    let corrupted = rsorth(&["selftest", "--corrupt-gradient"]);
    assert!(!corrupted.status.success());
    assert!(stdout(&corrupted).contains("FAIL gradient_fd_aris"));
}

#[test]
fn minpower_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = rsorth(&[
        "minpower",
        "--kind",
        "fris",
        "--seed",
        "5",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,objective,grad_norm,step"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    first[1].parse::<f64>().unwrap();
}

#[test]
fn baseline_reports_kappa() {
    let out = rsorth(&["baseline", "--seed", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("condition number"));
    assert!(text.contains("per-UE gains"));
}

#[test]
fn bad_config_fields_are_rejected() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), r#"{"trails": 10}"#).unwrap();
    let out = rsorth(&[
        "selftest",
        "--config",
        cfg.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}
