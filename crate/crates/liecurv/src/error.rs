//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction, validation, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs disagree on dimension (vector length, matrix shape, ...).
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix required to be symmetric is not.
    #[error("matrix is not symmetric at entry ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    /// A metric matrix is not positive definite.
    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    /// The invariant form is degenerate (or an eigenvalue of the relating
    /// operator falls below the degeneracy floor).
    #[error("invariant form is degenerate: {0}")]
    DegenerateForm(String),

    /// The algebra fails the unimodularity check required by the trace-based
    /// Ricci formulas.
    #[error("algebra is not unimodular (max |tr ad e_i| = {max_trace:.3e}); only the curvature-tensor Ricci path is available")]
    NotUnimodular { max_trace: f64 },

    /// Metric parameters do not satisfy the closed-form solution-family
    /// constraints.
    #[error("parameters are off the solution family: {0}")]
    FamilyConstraint(String),

    /// Invalid argument outside the other categories.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A document failed to load; carries a machine-readable code.
    #[error("{code}: {message}")]
    Document {
        /// Stable machine-readable code, e.g. `E_DIAG_BRACKET`.
        code: &'static str,
        message: String,
    },

    /// A numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn document(code: &'static str, message: impl Into<String>) -> Self {
        Error::Document {
            code,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI contract: 1 validation failure,
    /// 2 input error, 3 internal numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::NotSymmetric { .. }
            | Error::NotPositiveDefinite
            | Error::InvalidInput(_)
            | Error::FamilyConstraint(_)
            | Error::Document { .. } => 2,
            Error::DegenerateForm(_) | Error::NotUnimodular { .. } | Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
