use oanade::{DataError, Error};

/// A failed command: category, exit code and a one-line message.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// `error: <category>: <message>` on a single line.
    pub fn line(&self) -> String {
        let text = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {text}")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            return CliError::Numeric(e.to_string());
        }
        match e {
            Error::Data(_) | Error::Shape { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}
