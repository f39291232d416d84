use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too small: half-width {actual:.3} but at least {required:.3} is needed")]
    GridTooSmall { required: f64, actual: f64 },

    #[error("states live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Fock cutoff {cutoff} is insufficient: tail population {tail:.3e}")]
    InsufficientCutoff { cutoff: usize, tail: f64 },

    #[error("invalid flip count {0}: must be odd")]
    InvalidFlipCount(usize),

    #[error("integration step too large: trace drift {trace_drift:.3e}, hermiticity error {hermiticity:.3e}")]
    StepTooLarge { trace_drift: f64, hermiticity: f64 },

    #[error("circuit does not reproduce its target ({what}): deviation {deviation:.3e}")]
    CircuitMismatch { what: &'static str, deviation: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that indicate a numerical tolerance was not met,
    /// as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientCutoff { .. }
                | Error::StepTooLarge { .. }
                | Error::CircuitMismatch { .. }
                | Error::GridTooSmall { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
