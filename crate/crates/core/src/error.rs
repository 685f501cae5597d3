use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "degenerate scale at node {node}: distance to neighbor {k} is zero (duplicate coordinates)"
    )]
    DegenerateScale { node: usize, k: usize },

    #[error(
        "degenerate distance between nodes {i} and {j}: zero distance under a power-law weight"
    )]
    DegenerateDistance { i: usize, j: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dense eigendecomposition refused for n = {n} (limit {limit}); use the Chebyshev or first-order filters instead")]
    SizeLimit { n: usize, limit: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {estimate})"
    )]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("forward cache does not match the model or inputs: {0}")]
    StaleCache(String),

    #[error("empty index set: {0}")]
    EmptyIndexSet(&'static str),

    #[error("row {row}: negative count {value}")]
    NegativeCount { row: usize, value: f64 },

    #[error("row {row}: unknown type label {label:?}")]
    UnknownLabel { row: usize, label: String },

    #[error("malformed data: {0}")]
    Data(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("logarithmic binning requires positive values, found {0}")]
    NonPositive(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 configuration, 3 data, 4 divergence, 5 filesystem.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Divergence { .. } => 4,
            Error::Io { .. } => 5,
            _ => 3,
        }
    }
}
