use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value {value} at cell (i={i}, j={j})")]
    NonFinite { i: usize, j: usize, value: f64 },

    #[error("temperature {0} outside [0, 1] beyond tolerance")]
    OutOfRange(f64),

    #[error("scheme failure at t={t}: T={value} at cell (i={i}, j={j})")]
    SchemeFailure { t: f64, i: usize, j: usize, value: f64 },

    #[error("time step {dt} violates stability limit {limit}: {reason}")]
    Stability { dt: f64, limit: f64, reason: String },

    #[error("reaction model '{0}' is not of KPP type; bound evaluators require KPP")]
    NotKpp(String),

    #[error("reaction model is not concave (beta = {0})")]
    NotConcave(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("tube rejected: {0}")]
    TubeRejected(String),

    #[error("series does not cover [{start}, {end}] (available [{first}, {last}])")]
    Coverage { start: f64, end: f64, first: f64, last: f64 },

    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("indefinite effective tensor (eigenvalue {0:e})")]
    Indefinite(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
