//! End-to-end tests of the `rllcap` binary: output shapes and exit codes.

use std::process::{Command, Output};

fn rllcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rllcap"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let out = rllcap(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in [
        "capacity",
        "sweep-zs",
        "dp-solve",
        "bellman-check",
        "simulate-pms",
        "simulate-schannel",
        "asymptotic",
        "psi-check",
    ] {
        assert!(text.contains(sub), "--help is missing `{sub}`");
    }
}

#[test]
fn capacity_prints_agreeing_methods() {
    let out = rllcap(&["capacity", "--alpha", "0.25", "--beta", "0.25"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("maximization"));
    assert!(text.contains("root form"));
    assert!(text.contains("graph policy"));
    assert!(text.contains("0.177751701"));
}

#[test]
fn capacity_json_has_the_report_fields() {
    let out = rllcap(&["capacity", "--alpha", "0.1", "--beta", "0.3", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["agreement_ok"].as_bool().unwrap());
    assert!(v["capacity"].as_f64().unwrap() > 0.0);
    assert!(v["capacity_root"].is_number());
    assert!(v["capacity_graph"].is_number());
    assert!(!v["relabeled"].as_bool().unwrap());
}

#[test]
fn invalid_probability_exits_one_with_a_message() {
    let out = rllcap(&["capacity", "--alpha", "1.5", "--beta", "0.0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "stderr was: {err}");
}

#[test]
fn unconverged_iteration_exits_one() {
    let out = rllcap(&[
        "dp-solve", "--alpha", "0.25", "--beta", "0.25", "--grid", "200", "--iters", "2", "--tol",
        "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error:"), "stderr was: {err}");
}

#[test]
fn sweep_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = rllcap(&["sweep-zs", "--grid", "6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,alpha,beta,capacity,general,graph,z_opt,max_disagreement"
    );
    assert_eq!(
        text.lines().count(),
        1 + 3 * 7,
        "three families, grid+1 rows each"
    );
}

#[test]
fn bellman_check_passes_and_reports() {
    let out = rllcap(&[
        "bellman-check",
        "--alpha",
        "0.1",
        "--beta",
        "0.2",
        "--grid",
        "2000",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("max residual"));
}

#[test]
fn schannel_requires_beta_zero() {
    let out = rllcap(&[
        "simulate-schannel",
        "--alpha",
        "0.2",
        "--beta",
        "0.1",
        "--n",
        "12",
        "--trials",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pms_summary_covers_the_invariants() {
    let out = rllcap(&[
        "simulate-pms",
        "--alpha",
        "0.25",
        "--beta",
        "0.25",
        "--messages",
        "8",
        "--n",
        "80",
        "--trials",
        "10",
        "--seed",
        "6",
    ]);
    assert!(out.status.success(), "exit: {:?}", out.status);
    let text = stdout(&out);
    assert!(text.contains("error rate"));
    assert!(text.contains("input constraint: ok"));
    assert!(text.contains("length bound: ok"));
}

#[test]
fn pms_csv_has_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.csv");
    let out = rllcap(&[
        "simulate-pms",
        "--alpha",
        "0.1",
        "--beta",
        "0.2",
        "--messages",
        "4",
        "--n",
        "60",
        "--trials",
        "7",
        "--seed",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("trial,seed,true_message"));
    assert_eq!(text.lines().count(), 1 + 7);
}

#[test]
fn asymptotic_reports_the_coefficient_gap() {
    let out = rllcap(&["asymptotic", "--alpha", "0.001", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["coefficient_gap"].as_f64().unwrap() > 0.27);
    assert!(
        v["feedback_expansion"].as_f64().unwrap() > v["nonfeedback_expansion"].as_f64().unwrap()
    );
}

#[test]
fn psi_check_reports_twenty_tuples() {
    let out = rllcap(&[
        "psi-check",
        "--alpha",
        "0.25",
        "--beta",
        "0.25",
        "--trials",
        "1000",
        "--seed",
        "3",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 20);
    assert!(v["all_below_bound"].as_bool().unwrap());
}
