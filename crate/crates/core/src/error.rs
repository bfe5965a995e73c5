use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max|A - A^dagger| = {error:e}, max|A| = {scale:e})")]
    NotHermitian { error: f64, scale: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, \
         error {error:e} after {panels} panels"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("residue evaluation unavailable: {0}")]
    ResidueUnavailable(String),

    #[error(
        "Fock cutoff did not converge by n_max = {n_max}: last negativities {previous:e} and \
         {last:e}"
    )]
    CutoffNotConverged { n_max: usize, previous: f64, last: f64 },

    #[error("no entanglement threshold in bracket: {0}")]
    InvalidBracket(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
