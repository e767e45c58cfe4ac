use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid configuration for `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("perturbation map error: {0}")]
    Map(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("measure error: {0}")]
    Measure(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("insufficient data: need at least {need} rows, have {have}")]
    InsufficientData { need: usize, have: usize },

    #[error("subcritical witness infeasible: {0}")]
    Witness(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { key: key.into(), msg: msg.into() }
    }

    /// Configuration problems map to exit code 2 in the CLI, everything else to 1.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
