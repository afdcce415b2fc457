use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("integration exceeded {max_steps} steps (reached t = {t})")]
    IntegrationFailed { max_steps: usize, t: f64 },

    #[error("map evaluation failed at index {index}: {source}")]
    MapFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("kernel family {family} is not compatible with {topology} topology")]
    TopologyMismatch { family: String, topology: String },

    #[error("matrix is singular (pivot-ratio condition estimate {condition_estimate:.3e})")]
    Singular { condition_estimate: f64 },

    #[error("matrix is not positive definite (failed after jitter {jitter:.3e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("eigensolver did not converge in {iterations} iterations ({converged} of {requested} pairs converged)")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        requested: usize,
    },

    #[error("negative eigenvalue {0:.3e}: factorization is unreliable")]
    NegativeEigenvalue(f64),

    #[error("degenerate direction: {0}")]
    Degenerate(String),

    #[error("validation denominator is zero: label function is constant on the validation points")]
    ConstantLabel,

    #[error("unsupported model schema {found:?} (expected {expected:?})")]
    SchemaVersion { found: String, expected: String },

    #[error("malformed file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailed { .. }
                | Error::MapFailed { .. }
                | Error::Singular { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NoConvergence { .. }
                | Error::NegativeEigenvalue(_)
                | Error::Degenerate(_)
                | Error::ConstantLabel
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
