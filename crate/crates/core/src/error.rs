use thiserror::Error;

/// Errors raised by the numerics in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singular(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("constraint projection failed: {0}")]
    Projection(String),

    #[error("unstable configuration: {0}")]
    Unstable(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergent(_)
                | Error::Degenerate(_)
                | Error::Quadrature(_)
                | Error::Projection(_)
                | Error::Unstable(_)
                | Error::Coverage(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}

pub(crate) use ensure;
