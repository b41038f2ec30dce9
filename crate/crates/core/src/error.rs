use thiserror::Error;

use crate::gaussian::Basis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Gaussian term: {0}")]
    InvalidTerm(String),

    #[error("basis mismatch: {left:?} vs {right:?}")]
    BasisMismatch { left: Basis, right: Basis },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("binomial order m = {0} exceeds the exact-coefficient limit of 20")]
    OrderTooLarge(u32),

    #[error("post-selection rejected at round {round} after {attempts} attempts")]
    Rejected { round: u32, attempts: u64 },

    #[error("outcome grid construction failed: {0}")]
    Grid(String),

    #[error("window series did not converge within {0} harmonics")]
    SeriesDivergence(u64),
}
