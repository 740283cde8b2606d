//! Render the report bundle from a completed matrix run: per-model metrics,
//! the selection matrix, optimal-parameter tables, the best-GBT feature
//! ranking, and a summary.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::learners::TrainedModel;

use super::RunRecord;

#[derive(Deserialize)]
struct SelectionIn {
    method: String,
    selected: Vec<usize>,
    selected_names: Vec<String>,
    #[allow(dead_code)]
    scores: Vec<f64>,
}

const GROUP_ORDER: [&str; 9] = [
    "lasso_sfm", "dt_sfm", "rf_sfm", "chi_skb", "dt_rfe", "rf_rfe", "lasso_rfe", "voting", "all",
];
const ALGO_ORDER: [&str; 3] = ["gbt", "adab", "mlp"];
const TUNER_ORDER: [&str; 2] = ["tabu", "grid"];

fn order_key(r: &RunRecord) -> (usize, usize, usize) {
    (
        GROUP_ORDER.iter().position(|g| *g == r.group).unwrap_or(usize::MAX),
        ALGO_ORDER.iter().position(|a| *a == r.algo).unwrap_or(usize::MAX),
        TUNER_ORDER.iter().position(|t| *t == r.tuner).unwrap_or(usize::MAX),
    )
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Read records.json / selections.json / features.json from `out_dir` and
/// write the CSV tables and summary next to them.
pub fn emit_report(out_dir: &Path) -> Result<()> {
    let records: Vec<RunRecord> =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("records.json"))?)?;
    if records.is_empty() {
        return Err(Error::Config("records.json holds no records".into()));
    }
    let selections: Vec<SelectionIn> =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("selections.json"))?)?;
    let features: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("features.json"))?)?;

    let mut ordered: Vec<&RunRecord> = records.iter().collect();
    ordered.sort_by_key(|r| order_key(r));

    write_metrics_csv(out_dir, &ordered)?;
    write_selection_matrix(out_dir, &selections, &features)?;
    for algo in ALGO_ORDER {
        write_params_table(out_dir, &ordered, algo)?;
    }
    write_feature_importance(out_dir, &ordered, &selections)?;
    write_summary(out_dir, &ordered)?;
    Ok(())
}

fn write_metrics_csv(out_dir: &Path, ordered: &[&RunRecord]) -> Result<()> {
    let mut csv = String::from("group,algo,tuner,auc,sensitivity,specificity,precision,f1,accuracy\n");
    for r in ordered {
        match &r.metrics {
            Some(m) => {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.group,
                    r.algo,
                    r.tuner,
                    fmt(m.auc),
                    fmt(m.sensitivity),
                    fmt(m.specificity),
                    fmt(m.precision),
                    fmt(m.f1),
                    fmt(m.accuracy)
                ));
            }
            None => {
                csv.push_str(&format!("{},{},{},,,,,,\n", r.group, r.algo, r.tuner));
            }
        }
    }
    std::fs::write(out_dir.join("metrics.csv"), csv)?;
    Ok(())
}

fn write_selection_matrix(out_dir: &Path, selections: &[SelectionIn], features: &[String]) -> Result<()> {
    let mut csv = String::from("feature");
    for s in selections {
        csv.push(',');
        csv.push_str(&s.method);
    }
    csv.push_str(",total\n");
    for (i, name) in features.iter().enumerate() {
        csv.push_str(name);
        let mut total = 0;
        for s in selections {
            let hit = s.selected.contains(&i);
            // The total column counts the seven base methods only.
            if hit && s.method != "voting" && s.method != "all" {
                total += 1;
            }
            csv.push(',');
            csv.push_str(if hit { "1" } else { "0" });
        }
        csv.push_str(&format!(",{total}\n"));
    }
    std::fs::write(out_dir.join("selection_matrix.csv"), csv)?;
    Ok(())
}

/// Parameter rows x group columns for one algorithm's tabu-tuned cells.
fn write_params_table(out_dir: &Path, ordered: &[&RunRecord], algo: &str) -> Result<()> {
    let cells: Vec<&&RunRecord> = ordered
        .iter()
        .filter(|r| r.algo == algo && r.tuner == "tabu")
        .collect();
    if cells.is_empty() {
        return Ok(());
    }
    let param_names = &cells[0].param_names;
    let mut csv = String::from("parameter");
    for c in &cells {
        csv.push(',');
        csv.push_str(&c.group);
    }
    csv.push('\n');
    for (i, name) in param_names.iter().enumerate() {
        csv.push_str(name);
        for c in &cells {
            csv.push(',');
            if let Some(v) = c.params.get(i) {
                csv.push_str(&fmt(*v));
            }
        }
        csv.push('\n');
    }
    csv.push_str("optimal_auc");
    for c in &cells {
        csv.push(',');
        if let Some(m) = &c.metrics {
            csv.push_str(&fmt(m.auc));
        }
    }
    csv.push('\n');
    std::fs::write(out_dir.join(format!("optimal_params_{algo}.csv")), csv)?;
    Ok(())
}

/// Split-count F-score ranking from the best gbt-family model.
fn write_feature_importance(out_dir: &Path, ordered: &[&RunRecord], selections: &[SelectionIn]) -> Result<()> {
    let best_gbt = ordered
        .iter()
        .filter(|r| r.algo == "gbt" && r.metrics.is_some())
        .max_by(|a, b| {
            let (x, y) = (a.metrics.as_ref().unwrap().auc, b.metrics.as_ref().unwrap().auc);
            x.partial_cmp(&y).unwrap()
        });
    let Some(best) = best_gbt else {
        return Ok(());
    };
    let model: TrainedModel = serde_json::from_str(&std::fs::read_to_string(&best.model_path)?)?;
    let TrainedModel::Gbt(gbt) = model else {
        return Err(Error::Schema(format!(
            "model at {} is not a gbt model",
            best.model_path
        )));
    };
    let counts = gbt.split_counts();
    let names: Vec<String> = selections
        .iter()
        .find(|s| s.method == best.group)
        .map(|s| s.selected_names.clone())
        .unwrap_or_else(|| (0..counts.len()).map(|i| format!("f{i}")).collect());

    let mut rows: Vec<(String, usize)> = names.into_iter().zip(counts).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut csv = String::from("feature,f_score\n");
    for (name, count) in rows {
        csv.push_str(&format!("{name},{count}\n"));
    }
    std::fs::write(out_dir.join("feature_importance.csv"), csv)?;
    Ok(())
}

fn write_summary(out_dir: &Path, ordered: &[&RunRecord]) -> Result<()> {
    let best = ordered
        .iter()
        .filter(|r| r.metrics.is_some())
        .max_by(|a, b| {
            let (x, y) = (a.metrics.as_ref().unwrap().auc, b.metrics.as_ref().unwrap().auc);
            x.partial_cmp(&y).unwrap()
        });
    let failed: Vec<String> = ordered
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| format!("{}/{}/{}", r.group, r.algo, r.tuner))
        .collect();
    let summary = serde_json::json!({
        "records": ordered.len(),
        "failed_cells": failed,
        "best": best.map(|r| serde_json::json!({
            "group": r.group,
            "algo": r.algo,
            "tuner": r.tuner,
            "params": r.params,
            "param_names": r.param_names,
            "auc": r.metrics.as_ref().unwrap().auc,
            "sensitivity": r.metrics.as_ref().unwrap().sensitivity,
            "specificity": r.metrics.as_ref().unwrap().specificity,
            "f1": r.metrics.as_ref().unwrap().f1,
            "accuracy": r.metrics.as_ref().unwrap().accuracy,
        })),
    });
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
