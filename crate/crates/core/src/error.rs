use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The formula was asked for a value at (or numerically next to) a
    /// point where it is not defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: error estimate {estimate:e} exceeds requested {requested:e} \
         after {subdivisions} subdivisions"
    )]
    Quadrature {
        estimate: f64,
        requested: f64,
        subdivisions: usize,
    },

    #[error(
        "frequency cutoff {required:e} needed for a tail below {tail_target:e} exceeds the \
         configured cap {cap:e}"
    )]
    Truncation {
        required: f64,
        cap: f64,
        tail_target: f64,
    },

    #[error("evaluation failed at x = {x}: {source}")]
    AtAbscissa { x: f64, source: Box<Error> },

    #[error("degenerate regression: {0}")]
    Regression(String),
}

impl Error {
    /// True for failures that originate in numerical integration.
    pub fn is_quadrature(&self) -> bool {
        match self {
            Error::Quadrature { .. } | Error::Truncation { .. } => true,
            Error::AtAbscissa { source, .. } => source.is_quadrature(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
