use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("axis {axis}: value {value} lies outside the domain [{min}, {max}]")]
    Domain {
        axis: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("offset sample {index} at {position:?} leaves the basis domain; increase the padding")]
    OffsetOutsideDomain { index: usize, position: Vec<f64> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("iteration diverged at step {iteration} (mu = {mu}, objective = {objective})")]
    Divergence {
        iteration: usize,
        mu: f64,
        objective: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("normal {index} has zero length")]
    ZeroNormal { index: usize },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
