use thiserror::Error;

/// Errors raised by the library.
///
/// Variants follow three families: malformed inputs, quantities that are not
/// defined for the given law, and exhausted computational budgets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "proposal budget exhausted: {accepted} of {requested} directions accepted after \
         {proposals} proposals (acceptance rate {acceptance_rate:.3e}); rescale the eigenvalues"
    )]
    ProposalsExhausted {
        requested: usize,
        accepted: usize,
        proposals: usize,
        acceptance_rate: f64,
    },

    #[error("support size {size} exceeds the exact solver cap of {cap} atoms")]
    SupportCap { size: usize, cap: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for budget and capacity failures as opposed to bad inputs.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::ProposalsExhausted { .. } | Error::SupportCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
