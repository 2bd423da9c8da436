use thiserror::Error;

/// Errors raised by path construction, transport evaluation and config parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("junction mismatch: first path ends at {end:?}, second starts at {start:?}")]
    Junction { end: Vec<f64>, start: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("cannot compose transports: first ends at parameter {first_target}, second starts at {second_source}")]
    Composition {
        first_target: f64,
        second_source: f64,
    },

    #[error("singular matrix (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("group invariant violated for {group}: deviation {deviation:e}")]
    GroupInvariant { group: String, deviation: f64 },

    #[error("loop is not closed: endpoints differ by {gap:e}")]
    OpenLoop { gap: f64 },

    #[error("tensor error: {0}")]
    Tensor(String),

    #[error("invalid descriptor: {0}")]
    Descriptor(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
