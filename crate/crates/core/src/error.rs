use thiserror::Error;

use crate::ann::nnet::ParseError;
use crate::fxp::FxpError;

/// Errors surfaced by the analysis and verification entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fxp(#[from] FxpError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape { context: &'static str, expected: usize, found: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("search region contains no grid points")]
    InfeasibleRegion,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Shape { context, expected, found });
    }
    Ok(())
}
