//! CLI behavior: config loading and overrides, schema stability, error
//! handling, and output determinism across repeated runs.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tuplewise"))
}

#[test]
fn variance_curves_defaults_to_stdout_with_stable_schema() {
    let out = bin().arg("variance-curves").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,scheme,T,B,pair_budget,variance"
    );
    let mut saw_bootstrap = false;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6, "bad row {line}");
        saw_bootstrap |= fields[0] == "bootstrap-single" && fields[1] == "prop-swr";
    }
    // The prop-SWR sweep carries the single-bootstrap reference point.
    assert!(saw_bootstrap);
}

#[test]
fn estimate_respects_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("estimate.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "estimate", "n": 80, "m": 16, "workers": 4,
            "rounds": 2, "runs": 120, "epsilons": [0.1],
            "estimators": ["complete", "repart-complete"]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("rows.csv");
    let status = bin()
        .args([
            "estimate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "epsilon,estimator,empirical_rel_var,theoretical_rel_var,stderr,runs"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",complete,"));
    assert!(lines[2].contains(",repart-complete,"));
    assert!(lines[1].ends_with(",120"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("estimate.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "estimate", "n": 40, "m": 8, "workers": 2,
            "rounds": 2, "runs": 100, "epsilons": [0.1]}"#,
    )
    .unwrap();
    let run = |path: &std::path::Path| {
        let status = bin()
            .args([
                "estimate",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "11",
                "--out",
                path.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert_eq!(a, b);
}

#[test]
fn learn_outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("learn.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "learn",
            "data": {"kind": "synthetic", "dim": 3, "train_positives": 10,
                     "train_negatives": 30, "test_positives": 10,
                     "test_negatives": 30, "separation": 2.0},
            "workers": 2, "batch": 4, "iterations": 20, "runs": 4,
            "n_r_list": [5, "inf"], "monitor_pairs": 32, "test_every": 5}"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(format!("{name}.csv"));
        let status = bin()
            .args([
                "learn",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "21",
                "--threads",
                threads,
                "--out",
                path.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let rows = std::fs::read(&path).unwrap();
        let summary = std::fs::read(dir.path().join(format!("{name}-summary.csv"))).unwrap();
        (rows, summary)
    };
    let a = run("a", "1");
    let b = run("b", "8");
    assert_eq!(a, b);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"experiment": "estimate", "wrkers": 4}"#).unwrap();
    let out = bin()
        .args(["estimate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("wrkers"), "stderr: {err}");
}

#[test]
fn subcommand_config_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("learn.json");
    std::fs::write(&cfg, r#"{"experiment": "learn"}"#).unwrap();
    let out = bin()
        .args(["estimate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn learn_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("learn.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "learn",
            "data": {"kind": "synthetic", "dim": 2, "train_positives": 10,
                     "train_negatives": 20, "test_positives": 5,
                     "test_negatives": 10, "separation": 2.0},
            "workers": 2, "batch": 4, "iterations": 6, "runs": 2,
            "n_r_list": [2, "inf"], "monitor_pairs": 16, "test_every": 3}"#,
    )
    .unwrap();
    let out_path = dir.path().join("learn.csv");
    let status = bin()
        .args([
            "learn",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let rows = std::fs::read_to_string(&out_path).unwrap();
    assert!(rows.starts_with("n_r,run,iteration,monitor_loss,monitor_auc,test_auc\n"));
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 6);
    assert!(rows.contains("\ninf,"));
    let summary = std::fs::read_to_string(dir.path().join("learn-summary.csv")).unwrap();
    assert!(summary.starts_with(
        "n_r,iteration,median_monitor_loss,median_monitor_auc,median_test_auc,\
         q1_test_auc,q3_test_auc\n"
    ));
}

#[test]
fn check_theory_exit_code_tracks_row_failures() {
    // At smoke-test replication counts some 5% Monte Carlo rows will miss;
    // the contract is exit 0 iff no row reports false.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "check-theory", "mc_runs": 200, "unbias_runs": 200,
            "estimate_runs": 150, "swor_runs": 150}"#,
    )
    .unwrap();
    let out_path = dir.path().join("check.csv");
    let out = bin()
        .args([
            "check-theory",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("check_name,closed_form,empirical,rel_error,tolerance,pass\n"));
    let any_fail = text.lines().skip(1).any(|l| l.ends_with(",false"));
    assert_eq!(out.status.code(), Some(if any_fail { 1 } else { 0 }));
}

#[test]
fn shipped_config_files_parse() {
    let configs = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        tuplewise::config::ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("{path:?}: {e}"));
        seen += 1;
    }
    assert!(seen >= 4, "expected shipped configs, found {seen}");

    // The paper-scale estimation study ships as a config but is not gated.
    let paper = std::fs::read_to_string(configs.join("estimate-paper.json")).unwrap();
    match tuplewise::config::ExperimentConfig::from_json(&paper).unwrap() {
        tuplewise::config::ExperimentConfig::Estimate(c) => {
            assert_eq!((c.n, c.m, c.workers, c.rounds, c.runs), (5000, 50, 10, 4, 5000));
        }
        other => panic!("wrong experiment in estimate-paper.json: {other:?}"),
    }
}
