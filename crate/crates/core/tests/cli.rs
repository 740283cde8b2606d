//! End-to-end runs of the `tabutune` binary over its subcommand surface.

use std::path::Path;
use std::process::Command;

fn tabutune() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tabutune"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn synth_prep_select_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let schema = dir.path().join("schema.json");
    let prep = dir.path().join("prep.csv");

    run_ok(tabutune().args([
        "synth",
        "--rows",
        "260",
        "--admit-frac",
        "0.25",
        "--seed",
        "9",
        "--out",
        csv.to_str().unwrap(),
        "--schema-out",
        schema.to_str().unwrap(),
    ]));
    assert!(csv.exists() && schema.exists());
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("patient_sex,"));
    assert!(header.lines().next().unwrap().ends_with(",disposition"));
    assert_eq!(header.lines().count(), 261);

    run_ok(tabutune().args([
        "prep",
        "--in",
        csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--impute-k",
        "4",
        "--sample",
        "200",
        "--out",
        prep.to_str().unwrap(),
    ]));
    let prepared = std::fs::read_to_string(&prep).unwrap();
    assert_eq!(prepared.lines().count(), 201);
    // Imputation leaves no empty cells behind.
    assert!(!prepared.lines().any(|l| l.contains(",,")));

    run_ok(tabutune().args([
        "select",
        "--in",
        prep.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let selections: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("selections.json")).unwrap())
            .unwrap();
    let methods: Vec<&str> = selections
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["method"].as_str().unwrap())
        .collect();
    assert_eq!(
        methods,
        [
            "lasso_sfm", "dt_sfm", "rf_sfm", "chi_skb", "dt_rfe", "rf_rfe", "lasso_rfe",
            "voting", "all"
        ]
    );
}

#[test]
fn matrix_sensitivity_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "data": { "synth": { "rows": 240, "admit_fraction": 0.25, "missing": null } },
            "sample_size": 240,
            "seed": 11,
            "ts": { "max_iterations": 2, "neighborhood_size": 3 },
            "grid_budget": 6,
            "selection": { "rf_trees": 10, "k_best": 8,
                           "n_keep_dt_rfe": 8, "n_keep_rf_rfe": 8, "n_keep_lasso_rfe": 8 },
            "mlp_epochs": 30,
            "out_dir": out.to_str().unwrap(),
        })
        .to_string(),
    )
    .unwrap();

    let stdout = run_ok(tabutune().args(["matrix", "--config", config.to_str().unwrap()]));
    assert!(stdout.contains("54/54 cells ok"), "stdout: {stdout}");
    for artifact in [
        "records.json",
        "metrics.csv",
        "selection_matrix.csv",
        "optimal_params_gbt.csv",
        "optimal_params_adab.csv",
        "optimal_params_mlp.csv",
        "feature_importance.csv",
        "summary.json",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 55);
    assert!(metrics.starts_with("group,algo,tuner,auc,"));

    let stdout = run_ok(tabutune().args([
        "sensitivity",
        "--sizes",
        "120,200",
        "--config",
        config.to_str().unwrap(),
    ]));
    assert!(stdout.contains("size 120"), "stdout: {stdout}");
    let sens = std::fs::read_to_string(out.join("sensitivity.csv")).unwrap();
    assert_eq!(sens.lines().count(), 3);

    // Report re-rendering is idempotent.
    let before = std::fs::read(out.join("metrics.csv")).unwrap();
    run_ok(tabutune().args(["report", "--dir", out.to_str().unwrap()]));
    let after = std::fs::read(out.join("metrics.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn env_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |name: &str, seed_env: Option<&str>| -> String {
        let csv = dir.path().join(name);
        let mut cmd = tabutune();
        cmd.args([
            "synth",
            "--rows",
            "40",
            "--seed",
            "1",
            "--no-missing",
            "--out",
            csv.to_str().unwrap(),
        ]);
        match seed_env {
            Some(s) => cmd.env("TABUTUNE_SEED", s),
            None => cmd.env_remove("TABUTUNE_SEED"),
        };
        run_ok(&mut cmd);
        std::fs::read_to_string(&csv).unwrap()
    };
    let base = mk("a.csv", None);
    let same = mk("b.csv", None);
    let overridden = mk("c.csv", Some("777"));
    assert_eq!(base, same);
    assert_ne!(base, overridden);
}

#[test]
fn errors_are_reported_not_panicked() {
    let dir = tempfile::tempdir().unwrap();
    let out = Path::new("/nonexistent");
    let status = tabutune()
        .args(["report", "--dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("error:"));

    let missing = dir.path().join("missing.csv");
    let status = tabutune()
        .args([
            "sensitivity",
            "--sizes",
            "10",
            "--out",
            missing.parent().unwrap().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!status.status.success());
}
