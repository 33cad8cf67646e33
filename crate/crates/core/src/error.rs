use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments: out-of-domain values, invalid indices, malformed lotteries.
    Domain,
    /// Sign of the belief parameter incompatible with the utility sequence.
    Sign,
    /// Root finding, truncation or calibration did not succeed.
    Solver,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lottery index {0}: indices start at 1")]
    InvalidIndex(i64),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular attribute: expected utility is zero under the negative-utility branch")]
    SingularAttribute,

    #[error("beta = {beta} not allowed: {reason}")]
    Sign { beta: f64, reason: &'static str },

    #[error("normalization diverges for beta = {beta}: {reason}")]
    DivergentNormalization { beta: f64, reason: String },

    #[error("truncation not achieved by index {max_index} (relative tail {relative_tail:.3e} > {rel_tol:.1e})")]
    TruncationFailure {
        max_index: usize,
        relative_tail: f64,
        rel_tol: f64,
    },

    #[error("root solver failed: {0}")]
    Solver(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidIndex(_)
            | Error::IndexOutOfRange { .. }
            | Error::InvalidLottery(_)
            | Error::Domain(_)
            | Error::SingularAttribute => ErrorKind::Domain,
            Error::Sign { .. } | Error::DivergentNormalization { .. } => ErrorKind::Sign,
            Error::TruncationFailure { .. } | Error::Solver(_) | Error::Calibration(_) => {
                ErrorKind::Solver
            }
        }
    }

    /// Short stable tag, suitable for machine-parsable diagnostics.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidIndex(_) => "invalid-index",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::InvalidLottery(_) => "invalid-lottery",
            Error::Domain(_) => "domain",
            Error::SingularAttribute => "singular-attribute",
            Error::Sign { .. } => "sign",
            Error::DivergentNormalization { .. } => "divergent-normalization",
            Error::TruncationFailure { .. } => "truncation-failure",
            Error::Solver(_) => "solver",
            Error::Calibration(_) => "calibration-failure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
