use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A geometric quantity is undefined or outside the supported field of view.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("delay {delay:.6e} s outside receive window [0, {max_delay:.6e}] s")]
    OutOfWindow { delay: f64, max_delay: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
