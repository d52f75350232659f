use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("gamma = {0} is not below 1; the error bound is void")]
    GammaTooLarge(f64),
    #[error("penalty lambda = {lambda} is below beta = {beta}")]
    LambdaBelowBeta { lambda: f64, beta: f64 },
    #[error("beta must be finite, got {0}")]
    InfiniteBeta(f64),
    #[error("problem is infeasible")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
