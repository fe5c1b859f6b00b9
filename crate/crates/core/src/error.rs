use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    Index { index: usize, n_qubits: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter {param} appears in a {gate} gate; only RX/RY/RZ may carry trainable angles")]
    UnsupportedGate { param: usize, gate: &'static str },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("feature '{0}' is constant on the fitting partition")]
    DegenerateFeature(String),

    #[error("training diverged at epoch {epoch}: {msg}")]
    Divergence { epoch: usize, msg: String },
}
