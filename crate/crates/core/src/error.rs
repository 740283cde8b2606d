use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown label value '{0}'")]
    Label(String),

    #[error("column '{0}' is entirely missing; cannot impute")]
    Impute(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("stratification error: {0}")]
    Stratify(String),

    #[error("resample error: {0}")]
    Resample(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("grid budget exceeded: {candidates} candidates > budget {budget}")]
    Budget { candidates: u64, budget: u64 },

    #[error("objective evaluation failed at {params:?}: {source}")]
    Objective {
        params: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
