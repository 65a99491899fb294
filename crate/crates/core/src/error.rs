use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {what} (len {len})")]
    OutOfBounds { what: &'static str, index: usize, len: usize },

    #[error("unsupported nesting depth {0}")]
    UnsupportedDepth(u8),

    #[error("invalid model: {0}")]
    ModelInvalid(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::OutOfBounds { what, index, len })
    }
}
