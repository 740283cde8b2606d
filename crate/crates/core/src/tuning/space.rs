//! Mixed integer/float hyperparameter spaces and the per-learner presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Algo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Integer,
    Float,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
    /// Initialization sub-range: fresh solutions draw uniformly from here
    /// (kept low so the search starts with small, cheap models).
    pub init_lower: f64,
    pub init_upper: f64,
}

impl ParamSpec {
    pub fn new(
        name: &str,
        kind: ParamKind,
        lower: f64,
        upper: f64,
        init_lower: f64,
        init_upper: f64,
    ) -> Result<Self> {
        if !(lower <= init_lower && init_lower <= init_upper && init_upper <= upper) {
            return Err(Error::Config(format!(
                "parameter '{name}': need lower <= init_lower <= init_upper <= upper"
            )));
        }
        if kind == ParamKind::Integer && (lower.fract() != 0.0 || upper.fract() != 0.0) {
            return Err(Error::Config(format!(
                "integer parameter '{name}' has non-integral bounds"
            )));
        }
        Ok(ParamSpec {
            name: name.to_string(),
            kind,
            lower,
            upper,
            init_lower,
            init_upper,
        })
    }

    fn integer(name: &str, lower: f64, upper: f64, init_upper: f64) -> ParamSpec {
        ParamSpec::new(name, ParamKind::Integer, lower, upper, lower, init_upper).unwrap()
    }

    fn float(name: &str, lower: f64, upper: f64, init_lower: f64, init_upper: f64) -> ParamSpec {
        ParamSpec::new(name, ParamKind::Float, lower, upper, init_lower, init_upper).unwrap()
    }

    pub(crate) fn conform(&self, v: f64) -> f64 {
        let v = match self.kind {
            ParamKind::Integer => v.round(),
            ParamKind::Float => v,
        };
        v.clamp(self.lower, self.upper)
    }
}

/// Concrete assignment: one value per ParamSpec, integers stored as integral
/// reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Equality key: floats rounded to 6 decimals so the tabu list has teeth
    /// on continuous coordinates.
    pub fn rounded_key(&self) -> Vec<i64> {
        self.0.iter().map(|v| (v * 1e6).round() as i64).collect()
    }

    pub fn in_bounds(&self, space: &[ParamSpec]) -> bool {
        self.0.len() == space.len()
            && self.0.iter().zip(space).all(|(&v, s)| {
                v >= s.lower
                    && v <= s.upper
                    && (s.kind == ParamKind::Float || v.fract() == 0.0)
            })
    }
}

/// Tuned parameter space for one learner. Orderings match the learner's
/// `from_values` decoders.
pub fn space_for(algo: Algo) -> Vec<ParamSpec> {
    match algo {
        Algo::Gbt => vec![
            ParamSpec::integer("n_estimators", 1.0, 50.0, 5.0),
            ParamSpec::integer("max_depth", 0.0, 50.0, 5.0),
            ParamSpec::float("learning_rate", 0.0, 1.0, 0.001, 0.1),
            ParamSpec::float("gamma", 0.0, 50.0, 0.0, 2.0),
            ParamSpec::integer("max_delta_step", 0.0, 50.0, 5.0),
            ParamSpec::integer("n_parallel_trees", 0.0, 50.0, 5.0),
        ],
        Algo::Adab => vec![
            ParamSpec::integer("n_estimators", 1.0, 50.0, 5.0),
            ParamSpec::float("learning_rate", 0.0, 1.0, 0.001, 0.1),
            ParamSpec::integer("base_max_depth", 1.0, 50.0, 5.0),
            ParamSpec::integer("base_min_samples_split", 1.0, 50.0, 5.0),
            ParamSpec::integer("base_min_samples_leaf", 1.0, 50.0, 5.0),
        ],
        Algo::Mlp => vec![
            ParamSpec::integer("hidden_1", 1.0, 30.0, 5.0),
            ParamSpec::integer("hidden_2", 1.0, 30.0, 5.0),
            ParamSpec::integer("hidden_3", 1.0, 30.0, 5.0),
            ParamSpec::float("learning_rate", 0.001, 1.0, 0.001, 0.1),
            ParamSpec::float("momentum", 0.001, 1.0, 0.001, 0.1),
            ParamSpec::float("alpha", 0.001, 1.0, 0.001, 0.1),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_well_formed() {
        for algo in Algo::ALL {
            let space = space_for(algo);
            assert!(!space.is_empty());
            for s in &space {
                assert!(s.lower <= s.init_lower);
                assert!(s.init_lower <= s.init_upper);
                assert!(s.init_upper <= s.upper);
            }
        }
    }

    #[test]
    fn table_optimum_vectors_are_in_bounds() {
        // Reported optima for the gbt space in (estimators, depth, lr,
        // gamma, delta, parallel) order.
        let space = space_for(Algo::Gbt);
        let v = ParamVector(vec![14.0, 23.0, 0.075, 1.621, 3.0, 1.0]);
        assert!(v.in_bounds(&space));
        let adab = space_for(Algo::Adab);
        let v = ParamVector(vec![11.0, 0.276, 15.0, 15.0, 11.0]);
        assert!(v.in_bounds(&adab));
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(ParamSpec::new("x", ParamKind::Integer, 0.5, 2.0, 0.5, 1.0).is_err());
        assert!(ParamSpec::new("x", ParamKind::Float, 0.0, 1.0, 0.5, 0.2).is_err());
    }

    #[test]
    fn rounded_key_separates_sixth_decimal() {
        let a = ParamVector(vec![0.1234564]);
        let b = ParamVector(vec![0.1234574]);
        assert_ne!(a.rounded_key(), b.rounded_key());
        let c = ParamVector(vec![0.12345641]);
        assert_eq!(a.rounded_key(), c.rounded_key());
    }
}
