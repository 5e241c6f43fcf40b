use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("field has a non-finite value at cell {index}")]
    NonFiniteValue { index: usize },

    #[error("negative density {value:e} at cell {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("Newtonian potential is only defined for dimension 2 or 3, got {0}")]
    DimensionUnsupported(usize),

    #[error("drift kernel returned a non-finite value at cell {index}")]
    KernelUnbounded { index: usize },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt:e} exceeds the stable step {stable:e}")]
    CflViolation { dt: f64, stable: f64 },

    #[error("density became negative ({value:e}) at cell {index} in step {step}")]
    PositivityLoss { step: u64, index: usize, value: f64 },

    #[error("non-finite density or pressure at cell {index} in step {step}")]
    NonFiniteField { step: u64, index: usize },

    #[error("field is not negligible on the outer two-cell layer (max {value:e})")]
    SupportTouchesBoundary { value: f64 },

    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),

    #[error("run with m = {m} failed: {source}")]
    RunFailed {
        m: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RunFailed { source, .. } => source.is_numerical(),
            Error::NegativeDensity { .. }
            | Error::KernelUnbounded { .. }
            | Error::CflViolation { .. }
            | Error::PositivityLoss { .. }
            | Error::NonFiniteField { .. }
            | Error::NonFiniteValue { .. } => true,
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
