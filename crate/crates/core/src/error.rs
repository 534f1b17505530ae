use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A quantity that is impossible in exact arithmetic for a valid kernel
    /// and `a > 0` (leverage at 1, non-positive Schur complement, failed
    /// factorization).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Ordinary and deleted machines have no guarantee that the conformity
    /// difference is increasing in the candidate label.
    #[error("non-monotone conformity difference at training index {index} (B = {b:e})")]
    NonMonotone { index: usize, b: f64 },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
