use subdoc::filter::FilterError;
use subdoc::index::IndexError;
use subdoc::retrieve::RetrieveError;

/// Command failures, each class with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Data(_) => 4,
        }
    }

    pub(crate) fn io(what: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", what.display()))
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Provider { .. } => CliError::Provider(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<RetrieveError> for CliError {
    fn from(e: RetrieveError) -> Self {
        match e {
            RetrieveError::Invalid(m) => CliError::Usage(m),
            RetrieveError::Provider(p) => CliError::Provider(p.to_string()),
            RetrieveError::Index(i) => i.into(),
            other @ RetrieveError::MissingDocument(_) => CliError::Data(other.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Usage(e.to_string())
    }
}
