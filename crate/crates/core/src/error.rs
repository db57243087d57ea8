use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: grid has {expected} modes, got {found} values")]
    LengthMismatch { expected: usize, found: usize },

    #[error("symmetry violation in {what}: residual {residual:.3e}")]
    SymmetryViolation { what: &'static str, residual: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("momentum {momentum} is not a lattice momentum (dp = {dp})")]
    OffGrid { momentum: f64, dp: f64 },

    #[error("mode {k} cannot carry photons: {reason}")]
    InvalidMode { k: i64, reason: &'static str },

    #[error("negative or non-finite spectral density at mode {k}: {value}")]
    InvalidDensity { k: i64, value: f64 },

    #[error("polynomial still carries contact terms; drop them before numeric evaluation")]
    ContactTerms,

    #[error("unsupported photon content: {0}")]
    UnsupportedContent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
