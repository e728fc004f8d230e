use crate::config::ConfigError;

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Numeric(_) => 4,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<incite_core::Error> for RunError {
    fn from(e: incite_core::Error) -> Self {
        use incite_core::Error as E;
        match e {
            E::Numeric(_) | E::Undefined(_) => RunError::Numeric(e.to_string()),
            E::InvalidArgument(_) | E::Parse(_) | E::Io(_) => RunError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Data(format!("i/o: {e}"))
    }
}
