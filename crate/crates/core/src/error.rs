use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("non-finite integrand value {value} at node {index} (v = {node:?})")]
    NonFinite {
        index: usize,
        node: Vec<f64>,
        value: f64,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("kernel image count M = {given} too small, need at least {required}")]
    ImagesTooFew { given: usize, required: usize },

    #[error("solver diverged at t = {time}: {diagnostic}")]
    Diverged { time: f64, diagnostic: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
