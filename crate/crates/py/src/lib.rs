//! Python bindings: datasets, the three learners, metrics, and the tabu
//! search / grid search tuners (with Python callables as objectives).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

use tabutune::dataset as ds;
use tabutune::learners::{self, Algo};
use tabutune::metrics;
use tabutune::resampling;
use tabutune::tuning::{self, ParamKind, ParamSpec, ParamVector, TsConfig};

/// (name, kind, lower, upper, init_lower, init_upper)
type SpaceTuple = (String, String, f64, f64, f64, f64);

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Column-typed table with binary labels.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: ds::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load a CSV next to its schema declaration JSON.
    #[staticmethod]
    fn from_csv(path: PathBuf, schema_path: PathBuf) -> PyResult<Self> {
        let schema = ds::load_schema(&schema_path).map_err(err)?;
        let d = ds::load_csv(&path, &schema.to_schema(), &schema.label_column).map_err(err)?;
        Ok(PyDataset { inner: d })
    }

    /// Synthetic triage-style data; `missing` injects the vitals-heavy
    /// profile.
    #[staticmethod]
    #[pyo3(signature = (rows, admit_fraction=0.2, seed=42, missing=false))]
    fn synth(rows: usize, admit_fraction: f64, seed: u64, missing: bool) -> PyResult<Self> {
        let profile = if missing {
            ds::MissingProfile::triage_default()
        } else {
            ds::MissingProfile::none()
        };
        let d = ds::synth_generate(rows, &profile, admit_fraction, seed).map_err(err)?;
        Ok(PyDataset { inner: d })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().iter().map(|s| s.to_string()).collect()
    }

    fn labels(&self) -> Vec<u8> {
        self.inner.labels().to_vec()
    }

    fn row(&self, i: usize) -> PyResult<Vec<Option<f64>>> {
        if i >= self.inner.n_rows() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn has_missing(&self) -> bool {
        self.inner.has_missing()
    }

    fn encode(&self) -> Self {
        PyDataset {
            inner: ds::encode_categoricals(&self.inner),
        }
    }

    fn impute(&self, k: usize) -> PyResult<Self> {
        Ok(PyDataset {
            inner: ds::knn_impute(&self.inner, k).map_err(err)?,
        })
    }

    /// Min-max scale (statistics over all rows); returns the scaled dataset.
    fn normalize(&self) -> PyResult<Self> {
        let fit: Vec<usize> = (0..self.inner.n_rows()).collect();
        let (d, _) = ds::normalize_minmax(&self.inner, &fit).map_err(err)?;
        Ok(PyDataset { inner: d })
    }

    fn sample(&self, m: usize, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: ds::random_sample(&self.inner, m, seed).map_err(err)?,
        })
    }

    fn split(&self, test_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (train, test) = ds::stratified_split(&self.inner, test_fraction, seed).map_err(err)?;
        Ok((PyDataset { inner: train }, PyDataset { inner: test }))
    }

    #[pyo3(signature = (k_neighbors=5, target_ratio=1.0, seed=0))]
    fn smote(&self, k_neighbors: usize, target_ratio: f64, seed: u64) -> PyResult<Self> {
        let cfg = resampling::SmoteConfig {
            k_neighbors,
            target_ratio,
            seed,
        };
        Ok(PyDataset {
            inner: resampling::smote(&self.inner, &cfg).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} rows x {} features)",
            self.inner.n_rows(),
            self.inner.n_features()
        )
    }
}

/// Fitted classifier exposing probability-of-class-1 scoring.
#[pyclass(name = "Model")]
struct PyModel {
    inner: learners::TrainedModel,
}

#[pymethods]
impl PyModel {
    fn score(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        self.inner.score(&data.inner).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }
}

/// Fit one of "gbt" / "adab" / "mlp" with a raw parameter vector (see
/// `param_space` for the ordering).
#[pyfunction]
#[pyo3(signature = (algo, train, params, seed=0))]
fn fit(algo: &str, train: &PyDataset, params: Vec<f64>, seed: u64) -> PyResult<PyModel> {
    let algo = Algo::from_name(algo).map_err(err)?;
    Ok(PyModel {
        inner: learners::fit(algo, &train.inner, &params, seed).map_err(err)?,
    })
}

#[pyfunction]
fn roc_auc(labels: Vec<u8>, scores: Vec<f64>) -> PyResult<f64> {
    let (auc, _) = metrics::roc_auc(&labels, &scores).map_err(err)?;
    Ok(auc)
}

/// Full metrics report (confusion counts, the five measures, AUC) as a dict.
#[pyfunction]
#[pyo3(signature = (labels, scores, threshold=0.5))]
fn evaluate(py: Python<'_>, labels: Vec<u8>, scores: Vec<f64>, threshold: f64) -> PyResult<Py<PyDict>> {
    let report = metrics::evaluate(&labels, &scores, threshold).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("tp", report.true_pos)?;
    dict.set_item("fp", report.false_pos)?;
    dict.set_item("tn", report.true_neg)?;
    dict.set_item("fn", report.false_neg)?;
    dict.set_item("accuracy", report.accuracy)?;
    dict.set_item("sensitivity", report.sensitivity)?;
    dict.set_item("specificity", report.specificity)?;
    dict.set_item("precision", report.precision)?;
    dict.set_item("f1", report.f1)?;
    dict.set_item("auc", report.auc)?;
    Ok(dict.into())
}

/// The tuned parameter space of an algorithm as
/// (name, kind, lower, upper, init_lower, init_upper) tuples.
#[pyfunction]
fn param_space(algo: &str) -> PyResult<Vec<SpaceTuple>> {
    let algo = Algo::from_name(algo).map_err(err)?;
    Ok(tuning::space_for(algo)
        .into_iter()
        .map(|s| {
            let kind = match s.kind {
                ParamKind::Integer => "integer".to_string(),
                ParamKind::Float => "float".to_string(),
            };
            (s.name, kind, s.lower, s.upper, s.init_lower, s.init_upper)
        })
        .collect())
}

fn parse_space(space: Vec<SpaceTuple>) -> PyResult<Vec<ParamSpec>> {
    space
        .into_iter()
        .map(|(name, kind, lower, upper, init_lower, init_upper)| {
            let kind = match kind.as_str() {
                "integer" => ParamKind::Integer,
                "float" => ParamKind::Float,
                other => {
                    return Err(PyValueError::new_err(format!(
                        "kind must be 'integer' or 'float', got '{other}'"
                    )))
                }
            };
            ParamSpec::new(&name, kind, lower, upper, init_lower, init_upper).map_err(err)
        })
        .collect()
}

fn py_objective(objective: &Py<PyAny>) -> impl Fn(&ParamVector) -> tabutune::Result<f64> + '_ {
    move |v: &ParamVector| {
        Python::attach(|py| {
            objective
                .call1(py, (v.values().to_vec(),))
                .and_then(|r| r.extract::<f64>(py))
                .map_err(|e| tabutune::Error::Domain(format!("python objective raised: {e}")))
        })
    }
}

/// Maximize a Python callable over a custom space with tabu search. The
/// objective receives a list of floats and returns a float.
#[pyfunction]
#[pyo3(signature = (space, objective, iterations=300, neighborhood=10, seed=0, diversification=0.002))]
fn tabu_search(
    py: Python<'_>,
    space: Vec<SpaceTuple>,
    objective: Py<PyAny>,
    iterations: usize,
    neighborhood: usize,
    seed: u64,
    diversification: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let space = parse_space(space)?;
    let cfg = TsConfig {
        max_iterations: iterations,
        neighborhood_size: neighborhood,
        seed,
        diversification_prob: diversification,
        ..TsConfig::default()
    };
    let call = py_objective(&objective);
    let result = py
        .detach(|| tuning::ts_optimize(&space, &call, &cfg))
        .map_err(err)?;
    Ok((result.best.values().to_vec(), result.best_objective))
}

/// Exhaustive evenly spaced search over a custom space with a Python
/// objective; the per-parameter grid is sized to fit the budget.
#[pyfunction]
#[pyo3(signature = (space, objective, budget=3000))]
fn grid_search(
    py: Python<'_>,
    space: Vec<SpaceTuple>,
    objective: Py<PyAny>,
    budget: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let space = parse_space(space)?;
    let plan = tuning::grid_plan(&space, budget);
    let call = py_objective(&objective);
    let (best, value) = py
        .detach(|| tuning::grid_search(&space, &call, &plan, budget))
        .map_err(err)?;
    Ok((best.values().to_vec(), value))
}

/// AUC-driven tabu-search tuning of a built-in learner: fits on `train` and
/// scores on `eval` each evaluation. Returns (best_params, best_auc).
#[pyfunction]
#[pyo3(signature = (algo, train, eval, iterations=300, seed=0))]
fn tune(
    py: Python<'_>,
    algo: &str,
    train: &PyDataset,
    eval: &PyDataset,
    iterations: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let algo = Algo::from_name(algo).map_err(err)?;
    let space = tuning::space_for(algo);
    let train = train.inner.clone();
    let eval = eval.inner.clone();
    let cfg = TsConfig {
        max_iterations: iterations,
        seed,
        ..TsConfig::default()
    };
    let result = py
        .detach(move || {
            let objective = tuning::make_objective(algo, train, eval, seed)?;
            tuning::ts_optimize(&space, &objective, &cfg)
        })
        .map_err(err)?;
    Ok((result.best.values().to_vec(), result.best_objective))
}

#[pymodule]
fn tabutune_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(param_space, m)?)?;
    m.add_function(wrap_pyfunction!(tabu_search, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    Ok(())
}
