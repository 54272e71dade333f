use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },
    #[error("buffer holds {size} transitions but a batch of {requested} was requested")]
    Underfilled { size: usize, requested: usize },
    #[error("slot {index} is not occupied (buffer size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(&'static str),
    #[error("non-finite gradient in {0}; update skipped")]
    NonFiniteGradient(&'static str),
    #[error("training diverged: non-finite loss at batch element {index}")]
    Divergence { index: usize },
    #[error("usage error: {0}")]
    Usage(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}
