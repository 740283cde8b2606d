//! The three tunable classifiers behind one fit/score surface.

pub mod adaboost;
pub mod gbt;
pub mod mlp;
pub mod tree;

pub use adaboost::{adaboost_alpha, fit_adaboost, AdaBoostModel, AdabParams};
pub use gbt::{fit_gbt, leaf_weight, GbtModel, GbtParams};
pub use mlp::{fit_mlp, loss_and_grad, MlpModel, MlpParams};
pub use tree::{fit_tree, gini, Node, TreeLimits, TreeModel};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Gbt,
    Adab,
    Mlp,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Gbt, Algo::Adab, Algo::Mlp];

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Gbt => "gbt",
            Algo::Adab => "adab",
            Algo::Mlp => "mlp",
        }
    }

    pub fn from_name(name: &str) -> Result<Algo> {
        match name {
            "gbt" => Ok(Algo::Gbt),
            "adab" => Ok(Algo::Adab),
            "mlp" => Ok(Algo::Mlp),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }

    /// Whether this learner needs min-max scaled inputs.
    pub fn needs_normalized_inputs(&self) -> bool {
        matches!(self, Algo::Mlp)
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fitted learner, self-describing for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Gbt(GbtModel),
    Adab(AdaBoostModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Gbt(m) => m.n_features,
            TrainedModel::Adab(m) => m.n_features,
            TrainedModel::Mlp(m) => m.layer_sizes[0],
        }
    }

    /// Probability-of-class-1 per row.
    pub fn score(&self, rows: &Dataset) -> Result<Vec<f64>> {
        if rows.n_features() != self.n_features() {
            return Err(Error::Schema(format!(
                "model trained on {} features, got {}",
                self.n_features(),
                rows.n_features()
            )));
        }
        let dense = rows.dense()?;
        Ok(match self {
            TrainedModel::Gbt(m) => m.score_rows(&dense),
            TrainedModel::Adab(m) => m.score_rows(&dense),
            TrainedModel::Mlp(m) => m.score_rows(&dense),
        })
    }
}

/// Knobs that sit outside the tuned parameter vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// Full-batch epochs for the MLP.
    pub mlp_epochs: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            mlp_epochs: mlp::DEFAULT_EPOCHS,
        }
    }
}

/// Decode a raw parameter vector for `algo` and fit.
pub fn fit(algo: Algo, train: &Dataset, values: &[f64], seed: u64) -> Result<TrainedModel> {
    fit_with(algo, train, values, seed, &FitOptions::default())
}

pub fn fit_with(
    algo: Algo,
    train: &Dataset,
    values: &[f64],
    seed: u64,
    opts: &FitOptions,
) -> Result<TrainedModel> {
    match algo {
        Algo::Gbt => Ok(TrainedModel::Gbt(fit_gbt(train, &GbtParams::from_values(values)?, seed)?)),
        Algo::Adab => Ok(TrainedModel::Adab(fit_adaboost(
            train,
            &AdabParams::from_values(values)?,
            seed,
        )?)),
        Algo::Mlp => {
            let mut params = MlpParams::from_values(values)?;
            params.epochs = opts.mlp_epochs;
            Ok(TrainedModel::Mlp(fit_mlp(train, &params, seed)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;

    fn toy() -> Dataset {
        let rows = (0..20)
            .map(|i| vec![Some(i as f64 / 19.0), Some((19 - i) as f64 / 19.0)])
            .collect();
        let labels = (0..20).map(|i| u8::from(i >= 10)).collect();
        Dataset::new(
            vec![FeatureSchema::numeric("a"), FeatureSchema::numeric("b")],
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn scores_live_in_unit_interval() {
        let d = toy();
        for algo in Algo::ALL {
            let values: Vec<f64> = match algo {
                Algo::Gbt => vec![5.0, 3.0, 0.3, 0.0, 0.0, 1.0],
                Algo::Adab => vec![5.0, 0.5, 2.0, 2.0, 1.0],
                Algo::Mlp => vec![3.0, 3.0, 3.0, 0.5, 0.5, 0.01],
            };
            let model = fit(algo, &d, &values, 4).unwrap();
            for s in model.score(&d).unwrap() {
                assert!((0.0..=1.0).contains(&s), "{algo}: score {s}");
            }
        }
    }

    #[test]
    fn score_arity_mismatch_errors() {
        let d = toy();
        let model = fit(Algo::Gbt, &d, &[3.0, 2.0, 0.3, 0.0, 0.0, 1.0], 0).unwrap();
        let narrow = d.project(&[0]).unwrap();
        assert!(matches!(model.score(&narrow), Err(Error::Schema(_))));
    }

    #[test]
    fn serialized_model_is_self_describing() {
        let d = toy();
        let model = fit(Algo::Adab, &d, &[3.0, 1.0, 2.0, 2.0, 1.0], 0).unwrap();
        let json = serde_json::to_value(&model).unwrap();
        assert_eq!(json["kind"], "adab");
        let back: TrainedModel = serde_json::from_value(json).unwrap();
        assert_eq!(back.score(&d).unwrap(), model.score(&d).unwrap());
    }

    #[test]
    fn fit_and_score_reproducible() {
        let d = toy();
        let a = fit(Algo::Gbt, &d, &[8.0, 3.0, 0.2, 0.1, 0.0, 2.0], 13).unwrap();
        let b = fit(Algo::Gbt, &d, &[8.0, 3.0, 0.2, 0.1, 0.0, 2.0], 13).unwrap();
        assert_eq!(a.score(&d).unwrap(), b.score(&d).unwrap());
    }
}
