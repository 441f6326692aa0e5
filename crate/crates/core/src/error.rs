use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Shapes of the operands do not fit together.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument is outside the domain of the operation.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A vector that should be a bijection on `0..len` is not one.
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// Malformed binary input (PGM).
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    /// A textual document parsed, but a named entry is missing or invalid.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// An encryption oracle answered outside of its contract.
    #[error("oracle protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn format(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
