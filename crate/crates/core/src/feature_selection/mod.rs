//! Feature selection: chi-square, lasso-logistic, decision-tree and
//! random-forest scoring under select-k-best / select-from-model / recursive
//! elimination, fanned out into the nine feature groups used by the
//! experiment matrix.

mod forest;
mod lasso;

pub use forest::rf_importance;
pub use lasso::fit_lasso_logistic;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::learners::tree::{fit_tree, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    LassoSfm,
    DtSfm,
    RfSfm,
    ChiSkb,
    DtRfe,
    RfRfe,
    LassoRfe,
    Voting,
    All,
}

impl SelectionMethod {
    pub const GROUPS: [SelectionMethod; 9] = [
        SelectionMethod::LassoSfm,
        SelectionMethod::DtSfm,
        SelectionMethod::RfSfm,
        SelectionMethod::ChiSkb,
        SelectionMethod::DtRfe,
        SelectionMethod::RfRfe,
        SelectionMethod::LassoRfe,
        SelectionMethod::Voting,
        SelectionMethod::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SelectionMethod::LassoSfm => "lasso_sfm",
            SelectionMethod::DtSfm => "dt_sfm",
            SelectionMethod::RfSfm => "rf_sfm",
            SelectionMethod::ChiSkb => "chi_skb",
            SelectionMethod::DtRfe => "dt_rfe",
            SelectionMethod::RfRfe => "rf_rfe",
            SelectionMethod::LassoRfe => "lasso_rfe",
            SelectionMethod::Voting => "voting",
            SelectionMethod::All => "all",
        }
    }
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    /// Selected feature indices, ascending. Never empty.
    pub selected: Vec<usize>,
    /// Per-feature score under the method's criterion (full width).
    pub scores: Vec<f64>,
}

impl SelectionResult {
    pub fn selected_names(&self, d: &Dataset) -> Vec<String> {
        self.selected
            .iter()
            .map(|&i| d.schema()[i].name.clone())
            .collect()
    }
}

/// Chi-square score per feature against the binary label. Continuous
/// features are discretized into `bins` equal-frequency intervals;
/// categorical codes are their own intervals. Cells with zero expected
/// frequency contribute 0.
pub fn chi_square_scores(d: &Dataset, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::Domain("chi_square_scores needs bins >= 2".into()));
    }
    let n_rows = d.n_rows();
    let mut scores = Vec::with_capacity(d.n_features());
    for c in 0..d.n_features() {
        let present: Vec<(f64, u8)> = (0..n_rows)
            .filter_map(|r| d.value(r, c).map(|v| (v, d.labels()[r])))
            .collect();
        if present.is_empty() {
            scores.push(0.0);
            continue;
        }
        let intervals: Vec<usize> = match d.schema()[c].kind {
            FeatureKind::Categorical => present.iter().map(|&(v, _)| v.max(0.0) as usize).collect(),
            FeatureKind::Numeric => {
                let mut sorted: Vec<f64> = present.iter().map(|&(v, _)| v).collect();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = sorted.len();
                let mut edges: Vec<f64> = (1..bins).map(|i| sorted[i * n / bins]).collect();
                edges.dedup();
                present
                    .iter()
                    .map(|&(v, _)| edges.partition_point(|&e| e <= v))
                    .collect()
            }
        };
        let n_intervals = intervals.iter().max().map(|&m| m + 1).unwrap_or(1);
        let mut table = vec![[0u64; 2]; n_intervals];
        for (&i, &(_, y)) in intervals.iter().zip(&present) {
            table[i][y as usize] += 1;
        }
        let total = present.len() as f64;
        let col_totals = [
            table.iter().map(|row| row[0]).sum::<u64>() as f64,
            table.iter().map(|row| row[1]).sum::<u64>() as f64,
        ];
        let mut score = 0.0;
        for row in &table {
            let row_total = (row[0] + row[1]) as f64;
            for j in 0..2 {
                let expected = row_total * col_totals[j] / total;
                if expected > 0.0 {
                    let diff = row[j] as f64 - expected;
                    score += diff * diff / expected;
                }
            }
        }
        scores.push(score);
    }
    Ok(scores)
}

/// Top-k features by score; ties break toward the lower feature index.
pub fn select_k_best(scores: &[f64], k: usize) -> Result<SelectionResult> {
    if k == 0 || k > scores.len() {
        return Err(Error::Size(format!(
            "select_k_best: k = {k} outside 1..={}",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order[..k].to_vec();
    selected.sort_unstable();
    Ok(SelectionResult {
        method: SelectionMethod::ChiSkb,
        selected,
        scores: scores.to_vec(),
    })
}

/// Keep features whose importance is at least the mean importance.
pub fn select_from_model(importances: &[f64]) -> SelectionResult {
    let mean = importances.iter().sum::<f64>() / importances.len() as f64;
    let selected: Vec<usize> = (0..importances.len())
        .filter(|&i| importances[i] >= mean)
        .collect();
    SelectionResult {
        method: SelectionMethod::DtSfm,
        selected,
        scores: importances.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RfeRanker {
    Dt,
    Rf,
    Lasso,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankerOptions {
    pub lasso_lambda: f64,
    pub rf_trees: usize,
    pub seed: u64,
}

impl Default for RankerOptions {
    fn default() -> Self {
        RankerOptions {
            lasso_lambda: 0.01,
            rf_trees: 50,
            seed: 0,
        }
    }
}

fn ranker_scores(d: &Dataset, ranker: RfeRanker, opts: &RankerOptions, round: u64) -> Result<Vec<f64>> {
    match ranker {
        RfeRanker::Dt => {
            let weights = vec![1.0; d.n_rows()];
            let tree: TreeModel = fit_tree(d, &weights, usize::MAX, 2, 1)?;
            Ok(tree.importances)
        }
        RfeRanker::Rf => rf_importance(d, opts.rf_trees, opts.seed.wrapping_add(round)),
        RfeRanker::Lasso => {
            let (coefs, _) = fit_lasso_logistic(d, opts.lasso_lambda)?;
            Ok(coefs.iter().map(|c| c.abs()).collect())
        }
    }
}

/// Recursive feature elimination: refit the ranker, drop the `step`
/// lowest-importance features, repeat until `n_keep` remain. Scores record
/// the importance each feature held when it was eliminated (survivors carry
/// the final fit's importance).
pub fn rfe(
    d: &Dataset,
    ranker: RfeRanker,
    n_keep: usize,
    step: usize,
    opts: &RankerOptions,
) -> Result<SelectionResult> {
    let p = d.n_features();
    if n_keep == 0 || n_keep > p {
        return Err(Error::Size(format!("rfe: n_keep = {n_keep} outside 1..={p}")));
    }
    if step == 0 {
        return Err(Error::Size("rfe: step must be positive".into()));
    }
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut scores = vec![0.0; p];
    let mut round = 0u64;
    loop {
        let view = d.project(&remaining)?;
        let local = ranker_scores(&view, ranker, opts, round)?;
        for (&orig, &s) in remaining.iter().zip(&local) {
            scores[orig] = s;
        }
        if remaining.len() <= n_keep {
            break;
        }
        let drop_count = step.min(remaining.len() - n_keep);
        // Lowest importance first; ties drop the higher original index.
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| {
            local[a]
                .partial_cmp(&local[b])
                .unwrap()
                .then(remaining[b].cmp(&remaining[a]))
        });
        let dropped: Vec<usize> = order[..drop_count].iter().map(|&i| remaining[i]).collect();
        remaining.retain(|f| !dropped.contains(f));
        round += 1;
    }
    let method = match ranker {
        RfeRanker::Dt => SelectionMethod::DtRfe,
        RfeRanker::Rf => SelectionMethod::RfRfe,
        RfeRanker::Lasso => SelectionMethod::LassoRfe,
    };
    Ok(SelectionResult {
        method,
        selected: remaining,
        scores,
    })
}

/// Features picked by at least 4 of the 7 method results.
pub fn voting_group(results: &[SelectionResult]) -> Result<SelectionResult> {
    if results.len() != 7 {
        return Err(Error::Selection(format!(
            "voting_group expects exactly 7 results, got {}",
            results.len()
        )));
    }
    let p = results[0].scores.len();
    if results.iter().any(|r| r.scores.len() != p) {
        return Err(Error::Selection("voting inputs disagree on feature count".into()));
    }
    let mut counts = vec![0usize; p];
    for r in results {
        for &f in &r.selected {
            counts[f] += 1;
        }
    }
    let selected: Vec<usize> = (0..p).filter(|&f| counts[f] >= 4).collect();
    if selected.is_empty() {
        return Err(Error::Selection(
            "no feature was selected by at least 4 of the 7 methods".into(),
        ));
    }
    Ok(SelectionResult {
        method: SelectionMethod::Voting,
        selected,
        scores: counts.iter().map(|&c| c as f64).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub chi_bins: usize,
    pub k_best: usize,
    pub lasso_lambda: f64,
    pub rf_trees: usize,
    pub rfe_step: usize,
    pub n_keep_dt_rfe: usize,
    pub n_keep_rf_rfe: usize,
    pub n_keep_lasso_rfe: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            chi_bins: 5,
            k_best: 10,
            lasso_lambda: 0.01,
            rf_trees: 50,
            rfe_step: 1,
            n_keep_dt_rfe: 10,
            n_keep_rf_rfe: 11,
            n_keep_lasso_rfe: 10,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    fn clamped(&self, p: usize) -> SelectionConfig {
        let cap = |v: usize| v.clamp(1, p);
        SelectionConfig {
            k_best: cap(self.k_best),
            n_keep_dt_rfe: cap(self.n_keep_dt_rfe),
            n_keep_rf_rfe: cap(self.n_keep_rf_rfe),
            n_keep_lasso_rfe: cap(self.n_keep_lasso_rfe),
            ..self.clone()
        }
    }
}

/// Run the seven selection methods plus voting plus all-features. `raw`
/// feeds the tree/forest/chi paths; `normalized` feeds the lasso paths. Both
/// must share the same column order.
pub fn nine_groups(
    raw: &Dataset,
    normalized: &Dataset,
    cfg: &SelectionConfig,
) -> Result<Vec<SelectionResult>> {
    if raw.n_features() != normalized.n_features() {
        return Err(Error::Schema("raw/normalized views disagree on feature count".into()));
    }
    let p = raw.n_features();
    let cfg = cfg.clamped(p);
    let opts = RankerOptions {
        lasso_lambda: cfg.lasso_lambda,
        rf_trees: cfg.rf_trees,
        seed: cfg.seed,
    };

    let (coefs, _) = fit_lasso_logistic(normalized, cfg.lasso_lambda)?;
    let mut lasso_sfm = select_from_model(&coefs.iter().map(|c| c.abs()).collect::<Vec<_>>());
    lasso_sfm.method = SelectionMethod::LassoSfm;

    let weights = vec![1.0; raw.n_rows()];
    let dt = fit_tree(raw, &weights, usize::MAX, 2, 1)?;
    let dt_sfm = select_from_model(&dt.importances);

    let z = rf_importance(raw, cfg.rf_trees, cfg.seed)?;
    let mut rf_sfm = select_from_model(&z);
    rf_sfm.method = SelectionMethod::RfSfm;

    let chi = chi_square_scores(raw, cfg.chi_bins)?;
    let chi_skb = select_k_best(&chi, cfg.k_best)?;

    let dt_rfe = rfe(raw, RfeRanker::Dt, cfg.n_keep_dt_rfe, cfg.rfe_step, &opts)?;
    let rf_rfe = rfe(raw, RfeRanker::Rf, cfg.n_keep_rf_rfe, cfg.rfe_step, &opts)?;
    let lasso_rfe = rfe(normalized, RfeRanker::Lasso, cfg.n_keep_lasso_rfe, cfg.rfe_step, &opts)?;

    let seven = [
        lasso_sfm, dt_sfm, rf_sfm, chi_skb, dt_rfe, rf_rfe, lasso_rfe,
    ];
    let voting = voting_group(&seven)?;
    let all = SelectionResult {
        method: SelectionMethod::All,
        selected: (0..p).collect(),
        scores: vec![1.0; p],
    };

    let mut out = seven.to_vec();
    out.push(voting);
    out.push(all);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(x: Vec<Vec<f64>>, y: Vec<u8>) -> Dataset {
        let p = x[0].len();
        let schema = (0..p).map(|i| FeatureSchema::numeric(&format!("x{i}"))).collect();
        let rows = x.into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
        Dataset::new(schema, rows, y).unwrap()
    }

    #[test]
    fn chi_square_separated_2x2_table() {
        // 10 rows of value A all class 0, 10 rows of value B all class 1:
        // expected 5 per cell, score 4 * 25/5 = 20.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            x.push(vec![if i < 10 { 0.0 } else { 1.0 }]);
            y.push(u8::from(i >= 10));
        }
        let d = dataset(x, y);
        let scores = chi_square_scores(&d, 2).unwrap();
        assert_eq!(scores[0], 20.0);
    }

    #[test]
    fn chi_square_identical_distribution_is_zero() {
        // Same interval distribution for both classes: consecutive pairs
        // share a value and split one row to each class.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            x.push(vec![((i / 2) % 4) as f64]);
            y.push((i % 2) as u8);
        }
        let d = dataset(x, y);
        let scores = chi_square_scores(&d, 4).unwrap();
        assert!(scores[0].abs() < 1e-9, "score = {}", scores[0]);
    }

    #[test]
    fn chi_square_constant_feature_is_zero() {
        let x = vec![vec![3.0]; 20];
        let y = (0..20).map(|i| (i % 2) as u8).collect();
        let d = dataset(x, y);
        let scores = chi_square_scores(&d, 5).unwrap();
        assert_eq!(scores[0], 0.0);
    }

    #[test]
    fn chi_square_nonnegative_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random::<f64>()]).collect();
            let y: Vec<u8> = (0..30).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
            if y.iter().all(|&v| v == y[0]) {
                continue;
            }
            let d = dataset(x, y);
            assert!(chi_square_scores(&d, 5).unwrap()[0] >= 0.0);
        }
    }

    #[test]
    fn k_best_ordering_and_ties() {
        let r = select_k_best(&[3.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(r.selected, vec![0, 2]);
        let r = select_k_best(&[5.0, 5.0, 1.0], 1).unwrap();
        assert_eq!(r.selected, vec![0]);
        let r = select_k_best(&[1.0, 2.0], 2).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert!(select_k_best(&[1.0], 2).is_err());
        assert!(select_k_best(&[1.0], 0).is_err());
    }

    #[test]
    fn k_best_partition_property() {
        let scores = [0.3, 9.1, 4.2, 4.2, 0.0, 7.7];
        let k = 2;
        let top = select_k_best(&scores, k).unwrap();
        let inverted: Vec<f64> = scores.iter().map(|s| -s).collect();
        let bottom = select_k_best(&inverted, scores.len() - k).unwrap();
        let mut union: Vec<usize> = top.selected.iter().chain(&bottom.selected).copied().collect();
        union.sort_unstable();
        union.dedup();
        assert_eq!(union, (0..scores.len()).collect::<Vec<_>>());
    }

    #[test]
    fn sfm_mean_threshold() {
        let r = select_from_model(&[0.9, 0.1, 0.2]);
        assert_eq!(r.selected, vec![0]);
        let r = select_from_model(&[0.5, 0.5, 0.5]);
        assert_eq!(r.selected, vec![0, 1, 2]);
        let r = select_from_model(&[0.7]);
        assert_eq!(r.selected, vec![0]);
    }

    fn planted_drop(n: usize, informative: usize, noise: usize, seed: u64) -> Dataset {
        // Informative features shift strongly with the label.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let label = u8::from(rng.random::<f64>() < 0.5);
            let mut row = Vec::with_capacity(informative + noise);
            for j in 0..informative {
                let shift = 1.2 + 0.2 * j as f64;
                row.push(label as f64 * shift + rng.random::<f64>());
            }
            for _ in 0..noise {
                row.push(rng.random::<f64>());
            }
            x.push(row);
            y.push(label);
        }
        dataset(x, y)
    }

    #[test]
    fn rfe_identity_and_single_keep() {
        let d = planted_drop(80, 2, 2, 1);
        let opts = RankerOptions::default();
        let r = rfe(&d, RfeRanker::Dt, 4, 1, &opts).unwrap();
        assert_eq!(r.selected, vec![0, 1, 2, 3]);
        let r = rfe(&d, RfeRanker::Dt, 1, 1, &opts).unwrap();
        assert_eq!(r.selected.len(), 1);
    }

    #[test]
    fn rfe_recovers_planted_trio() {
        let d = planted_drop(500, 3, 7, 2);
        let opts = RankerOptions::default();
        for ranker in [RfeRanker::Dt, RfeRanker::Lasso] {
            let r = rfe(&d, ranker, 3, 1, &opts).unwrap();
            assert_eq!(r.selected, vec![0, 1, 2], "{ranker:?} picked {:?}", r.selected);
        }
    }

    #[test]
    fn rfe_output_size_is_exact() {
        let d = planted_drop(120, 2, 6, 3);
        for n_keep in 1..=8 {
            let r = rfe(&d, RfeRanker::Dt, n_keep, 2, &RankerOptions::default()).unwrap();
            assert_eq!(r.selected.len(), n_keep);
        }
    }

    #[test]
    fn voting_threshold_and_permutation_invariance() {
        let p = 5;
        let mk = |sel: &[usize]| SelectionResult {
            method: SelectionMethod::DtSfm,
            selected: sel.to_vec(),
            scores: vec![0.0; p],
        };
        // Feature 0: 7 votes; feature 1: 4; feature 2: 3; feature 3: 6.
        let results = vec![
            mk(&[0, 1, 2, 3]),
            mk(&[0, 1, 3]),
            mk(&[0, 1, 2, 3]),
            mk(&[0, 1, 3]),
            mk(&[0, 2, 3]),
            mk(&[0, 3]),
            mk(&[0, 4]),
        ];
        let v = voting_group(&results).unwrap();
        assert_eq!(v.selected, vec![0, 1, 3]);
        assert_eq!(v.scores[2], 3.0);

        let mut reversed = results.clone();
        reversed.reverse();
        assert_eq!(voting_group(&reversed).unwrap().selected, v.selected);

        assert!(voting_group(&results[..5]).is_err());
    }

    #[test]
    fn voting_empty_set_errors() {
        let p = 3;
        let mk = |sel: &[usize]| SelectionResult {
            method: SelectionMethod::DtSfm,
            selected: sel.to_vec(),
            scores: vec![0.0; p],
        };
        let results = vec![
            mk(&[0]),
            mk(&[1]),
            mk(&[2]),
            mk(&[0]),
            mk(&[1]),
            mk(&[2]),
            mk(&[0]),
        ];
        assert!(matches!(voting_group(&results), Err(Error::Selection(_))));
    }

    #[test]
    fn nine_groups_shape() {
        let d = planted_drop(200, 3, 3, 4);
        let fit: Vec<usize> = (0..d.n_rows()).collect();
        let (norm, _) = crate::dataset::normalize_minmax(&d, &fit).unwrap();
        let cfg = SelectionConfig {
            k_best: 3,
            n_keep_dt_rfe: 3,
            n_keep_rf_rfe: 3,
            n_keep_lasso_rfe: 3,
            rf_trees: 15,
            ..SelectionConfig::default()
        };
        let groups = nine_groups(&d, &norm, &cfg).unwrap();
        assert_eq!(groups.len(), 9);
        for (g, m) in groups.iter().zip(SelectionMethod::GROUPS) {
            assert_eq!(g.method, m);
            assert!(!g.selected.is_empty());
            assert!(g.selected.iter().all(|&f| f < 6));
        }
        assert_eq!(groups[8].selected, (0..6).collect::<Vec<_>>());
    }
}
