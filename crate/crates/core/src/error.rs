use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tensor violates permutational symmetry (max deviation {max_deviation:.3e})")]
    SymmetryViolation { max_deviation: f64 },

    #[error("matrix is not orthogonal (max deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigenphases wrap around: |E|max * delta = {phase:.4} >= pi; use delta <= {suggested_delta:.4e}")]
    PhaseWrap { phase: f64, suggested_delta: f64 },

    #[error("Chebyshev degree {given} misses tolerance {tolerance:.1e}; degree {required} is needed")]
    DegreeTooLow {
        given: usize,
        required: usize,
        tolerance: f64,
    },

    #[error("time step underflow after {steps} steps (estimated error {error:.3e})")]
    StepUnderflow { steps: usize, error: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("zero-norm state: {0}")]
    ZeroNorm(String),

    #[error("register widths differ ({0} vs {1})")]
    WidthMismatch(u32, u32),

    #[error("register width {0} is too large for a brute-force statevector (max 6)")]
    RegisterTooLarge(u32),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::SymmetryViolation { .. }
            | Error::NotOrthogonal { .. }
            | Error::NotHermitian { .. }
            | Error::WidthMismatch(..)
            | Error::RegisterTooLarge(_)
            | Error::Checkpoint(_)
            | Error::Json(_) => ErrorKind::Validation,
            Error::PhaseWrap { .. }
            | Error::DegreeTooLow { .. }
            | Error::StepUnderflow { .. }
            | Error::NoConvergence { .. }
            | Error::ZeroNorm(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
