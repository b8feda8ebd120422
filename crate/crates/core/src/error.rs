use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("config error in key `{key}`: {message}")]
    ConfigValue { key: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigSyntax { .. } | Error::ConfigValue { .. } | Error::InvalidParameter(_) => 1,
            Error::Construction(_) | Error::InvalidInput(_) => 2,
            Error::Io(_) => 3,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn construction(msg: impl Into<String>) -> Error {
    Error::Construction(msg.into())
}
