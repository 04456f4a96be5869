use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of model domain: {0}")]
    OutOfDomain(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid building map: {0}")]
    Map(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by a numerical/identifiability failure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::SingularFit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
