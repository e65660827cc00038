//! Error type shared across the crate.

use thiserror::Error;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (non-unit axis, coincident
    /// singularities, resonant exponents, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Evaluation requested outside the domain of definition (at a
    /// singular point, stencil leaving the half-plane, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance (quadrature,
    /// step underflow, non-convergent extrapolation).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Structural obstruction: the requested object does not exist for
    /// this input (reducible system, A12 identically zero, resonance).
    #[error("structure error: {0}")]
    Structure(String),

    /// Configuration outside the supported generic class.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Iterative solver exhausted its budget; carries the best residual.
    #[error("solver did not converge: {msg} (best residual {residual:.3e})")]
    Solver { msg: String, residual: f64 },

    /// Geometry checks failed (boundary fit, closure).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// I/O error (file formats live in the CLI; kept here for adapters).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}
