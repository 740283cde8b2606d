//! Discrete two-class AdaBoost over weighted CART base learners.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::sigmoid;
use super::tree::{fit_tree_columns, to_columns, Node, TreeLimits};

/// Floor applied to a zero weighted error so the perfect-round vote stays
/// finite.
const EPS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdabParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub base_max_depth: usize,
    pub base_min_samples_split: usize,
    pub base_min_samples_leaf: usize,
}

impl AdabParams {
    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 5 {
            return Err(Error::Schema(format!("adaboost expects 5 parameters, got {}", v.len())));
        }
        Ok(AdabParams {
            n_estimators: v[0].round() as usize,
            learning_rate: v[1],
            base_max_depth: v[2].round() as usize,
            base_min_samples_split: v[3].round() as usize,
            base_min_samples_leaf: v[4].round() as usize,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub n_features: usize,
    /// (vote weight alpha_t, base tree) per retained round.
    pub rounds: Vec<(f64, Node)>,
}

/// alpha_t = learning_rate * 0.5 * ln((1 - eps) / eps).
pub fn adaboost_alpha(eps: f64, learning_rate: f64) -> f64 {
    let eps = eps.clamp(EPS_FLOOR, 1.0 - EPS_FLOOR);
    learning_rate * 0.5 * ((1.0 - eps) / eps).ln()
}

impl AdaBoostModel {
    /// Probability of class 1: logistic squashing of the signed vote margin.
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|row| {
                let margin: f64 = self
                    .rounds
                    .iter()
                    .map(|(alpha, tree)| {
                        let h = if tree.eval(row) >= 0.5 { 1.0 } else { -1.0 };
                        alpha * h
                    })
                    .sum();
                sigmoid(margin)
            })
            .collect()
    }
}

pub fn fit_adaboost(train: &Dataset, params: &AdabParams, _seed: u64) -> Result<AdaBoostModel> {
    let (c0, c1) = train.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::Fit("adaboost requires both classes in training data".into()));
    }
    if params.n_estimators == 0 {
        return Err(Error::Fit("adaboost requires n_estimators >= 1".into()));
    }
    let columns = to_columns(train)?;
    let labels = train.labels();
    let n = labels.len();
    let limits = TreeLimits {
        max_depth: params.base_max_depth,
        min_samples_split: params.base_min_samples_split.max(2),
        min_samples_leaf: params.base_min_samples_leaf.max(1),
    };

    let dense: Vec<Vec<f64>> = (0..n)
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    for _ in 0..params.n_estimators {
        let tree = fit_tree_columns(&columns, labels, &weights, limits, None, None)?;
        let predictions: Vec<u8> = dense
            .iter()
            .map(|row| u8::from(tree.root.eval(row) >= 0.5))
            .collect();
        let eps: f64 = predictions
            .iter()
            .zip(labels)
            .zip(&weights)
            .filter(|((p, y), _)| p != y)
            .map(|(_, &w)| w)
            .sum();

        if eps >= 0.5 {
            // The learner is no better than chance on these weights; keep
            // what we have.
            break;
        }
        let alpha = adaboost_alpha(eps, params.learning_rate);
        rounds.push((alpha, tree.root));
        if eps <= 0.0 {
            break;
        }

        let boost = alpha.exp();
        for ((p, y), w) in predictions.iter().zip(labels).zip(weights.iter_mut()) {
            if p != y {
                *w *= boost;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
    }

    if rounds.is_empty() {
        // First tree already at chance level: fall back to its vote so the
        // model still scores.
        let tree = fit_tree_columns(&columns, labels, &weights, limits, None, None)?;
        rounds.push((0.0, tree.root));
    }

    Ok(AdaBoostModel {
        n_features: train.n_features(),
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;

    fn dataset_1d(values: &[f64], labels: &[u8]) -> Dataset {
        let rows = values.iter().map(|&v| vec![Some(v)]).collect();
        Dataset::new(vec![FeatureSchema::numeric("x")], rows, labels.to_vec()).unwrap()
    }

    fn params(n_estimators: usize) -> AdabParams {
        AdabParams {
            n_estimators,
            learning_rate: 1.0,
            base_max_depth: 1,
            base_min_samples_split: 2,
            base_min_samples_leaf: 1,
        }
    }

    #[test]
    fn alpha_hand_value() {
        let alpha = adaboost_alpha(0.25, 1.0);
        assert!((alpha - 0.5 * 3.0f64.ln()).abs() < 1e-15);
        // learning_rate scales linearly.
        assert!((adaboost_alpha(0.25, 0.5) - 0.25 * 3.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_estimator_matches_base_tree() {
        let values = [0.0, 0.1, 0.2, 0.8, 0.9, 1.0];
        let labels = [0, 0, 1, 1, 1, 0];
        let d = dataset_1d(&values, &labels);
        let model = fit_adaboost(&d, &params(1), 0).unwrap();
        let tree = super::super::tree::fit_tree(&d, &[1.0 / 6.0; 6], 1, 2, 1).unwrap();
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let boost_scores = model.score_rows(&rows);
        let tree_scores = tree.score_rows(&rows);
        for (b, t) in boost_scores.iter().zip(&tree_scores) {
            assert_eq!(*b >= 0.5, *t >= 0.5);
        }
    }

    #[test]
    fn separable_data_stops_early() {
        // An 8-point set a depth-1 tree separates perfectly: one round, done.
        let values = [0.0, 0.1, 0.2, 0.3, 0.7, 0.8, 0.9, 1.0];
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let d = dataset_1d(&values, &labels);
        let model = fit_adaboost(&d, &params(10), 0).unwrap();
        assert_eq!(model.rounds.len(), 1);
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let scores = model.score_rows(&rows);
        for (s, &y) in scores.iter().zip(&labels) {
            assert_eq!((*s >= 0.5) as u8, y);
        }
    }

    #[test]
    fn retained_rounds_beat_chance_on_their_weights() {
        // Noisy data to force several boosting rounds, then re-derive each
        // round's weighted error by replaying the weight updates.
        let values: Vec<f64> = (0..30).map(|i| i as f64 / 30.0).collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from((i / 3) % 2 == 0)).collect();
        let d = dataset_1d(&values, &labels);
        let p = AdabParams { n_estimators: 8, ..params(8) };
        let model = fit_adaboost(&d, &p, 0).unwrap();
        assert!(model.rounds.len() > 1);

        let n = values.len();
        let mut weights = vec![1.0 / n as f64; n];
        for (alpha, tree) in &model.rounds {
            let eps: f64 = values
                .iter()
                .zip(&labels)
                .zip(&weights)
                .filter(|((v, y), _)| u8::from(tree.eval(&[**v]) >= 0.5) != **y)
                .map(|(_, w)| *w)
                .sum();
            assert!(eps < 0.5, "retained round with eps = {eps}");
            let boost = alpha.exp();
            for ((v, y), w) in values.iter().zip(&labels).zip(weights.iter_mut()) {
                if u8::from(tree.eval(&[*v]) >= 0.5) != *y {
                    *w *= boost;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }

    #[test]
    fn single_class_errors() {
        let d = dataset_1d(&[0.0, 1.0], &[1, 1]);
        assert!(matches!(fit_adaboost(&d, &params(3), 0), Err(Error::Fit(_))));
    }

    #[test]
    fn zero_margin_scores_half() {
        let model = AdaBoostModel { n_features: 1, rounds: vec![] };
        assert_eq!(model.score_rows(&[vec![1.0]]), vec![0.5]);
    }
}
