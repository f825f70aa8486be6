use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpiralError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate ridge fit: {0}")]
    DegenerateFit(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpiralError {
    fn from(e: std::io::Error) -> Self {
        SpiralError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpiralError>;

pub(crate) fn invalid<T>(name: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(SpiralError::InvalidParameter {
        name,
        reason: reason.into(),
    })
}
