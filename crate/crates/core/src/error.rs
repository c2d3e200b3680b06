//! Crate-wide error type.

use thiserror::Error;

/// Errors produced across the simulation and inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (non-positive area, empty
    /// support, zero cardiac output, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is structurally invalid (bad network file, degenerate
    /// grid, inconsistent spec).
    #[error("configuration error: {0}")]
    Config(String),

    /// The PDE solver produced a non-finite or non-physical state.
    #[error("solver blow-up in segment `{segment}` cell {cell} at t = {time:.6} s: {detail}")]
    BlowUp {
        segment: String,
        cell: usize,
        time: f64,
        detail: String,
    },

    /// An iterative boundary solve failed to converge.
    #[error("boundary solve failed at `{location}`: residual {residual:.3e} after {iterations} iterations")]
    BoundaryNonConvergence {
        location: String,
        residual: f64,
        iterations: usize,
    },

    /// A signal does not carry the structure an operation needs
    /// (constant waveform, undetectable pulse foot, ...).
    #[error("signal error: {0}")]
    Signal(String),

    /// Tensor or sample-length mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// A numeric operation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn signal(msg: impl Into<String>) -> Self {
        Error::Signal(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
