//! The AUC tuning objective: decode a vector, fit, score the evaluation
//! split, memoize.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, Algo, FitOptions};
use crate::metrics::roc_auc;

use super::ParamVector;

/// Build the objective closure for one (learner, train, eval) cell. The
/// train split should already be rebalanced; the evaluation split stays
/// untouched. Failed fits score 0.5 with a logged warning so the search
/// never aborts on a degenerate corner; repeated vectors come from the memo.
pub fn make_objective(
    algo: Algo,
    train: Dataset,
    eval: Dataset,
    seed: u64,
) -> Result<impl Fn(&ParamVector) -> Result<f64> + Send + Sync> {
    make_objective_with(algo, train, eval, seed, FitOptions::default())
}

pub fn make_objective_with(
    algo: Algo,
    train: Dataset,
    eval: Dataset,
    seed: u64,
    opts: FitOptions,
) -> Result<impl Fn(&ParamVector) -> Result<f64> + Send + Sync> {
    let (c0, c1) = eval.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::Domain(
            "objective evaluation split needs both classes".into(),
        ));
    }
    let memo: Mutex<HashMap<Vec<i64>, f64>> = Mutex::new(HashMap::new());
    Ok(move |v: &ParamVector| -> Result<f64> {
        let key = v.rounded_key();
        if let Some(&hit) = memo.lock().unwrap().get(&key) {
            return Ok(hit);
        }
        let outcome = learners::fit_with(algo, &train, v.values(), seed, &opts)
            .and_then(|model| model.score(&eval))
            .and_then(|scores| roc_auc(eval.labels(), &scores));
        let value = match outcome {
            Ok((auc, _)) => auc,
            Err(e) => {
                eprintln!(
                    "warning: {algo} fit failed at {:?} ({e}); objective scored 0.5",
                    v.values()
                );
                0.5
            }
        };
        memo.lock().unwrap().insert(key, value);
        Ok(value)
    })
}
