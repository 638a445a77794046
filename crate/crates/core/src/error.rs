use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer capacity exceeded in {0}")]
    Capacity(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument {value} outside the Chebyshev domain [-1, 1]")]
    Domain { value: f64 },

    #[error("basis coordinate solve failed: {0}")]
    Rank(String),

    #[error("degenerate splitting (residual {residual:e} > {tolerance:e}); re-draw the random combination with a different seed")]
    Degeneracy { residual: f64, tolerance: f64 },

    #[error("eigenvalue for T_{0} missing from the decomposition; recompute with {0} among the extra operators")]
    MissingEigenvalue(u64),

    #[error("ill-conditioned test point: |F(z)| = {value:e} below {threshold:e}")]
    IllConditioned { value: f64, threshold: f64 },

    #[error("enumeration budget of {budget} points exceeded (found {found} independent vectors so far)")]
    Budget { budget: u64, found: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
