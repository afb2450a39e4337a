use thiserror::Error;

/// Errors raised by chart construction, geometry evaluation and exact algebra.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular chart at grid point {point}: metric condition number {condition:.3e} exceeds {limit:.0e}")]
    SingularChart {
        point: usize,
        condition: f64,
        limit: f64,
    },
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not pseudo-orthogonal (max deviation {0:.3e})")]
    NotPseudoOrthogonal(f64),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("malformed config: {0}")]
    MalformedConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
