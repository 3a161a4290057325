use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("acceptance gate failed: {0}")]
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Gate(_) => 3,
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    pca_engine::EngineError,
    pca_localfield::LfError,
    pca_gaussian::GaussError,
    pca_verify::VerifyError,
    std::io::Error,
    csv::Error,
    serde_json::Error
);

// Malformed inputs surface from these two before any simulation starts.
impl From<pca_core::CoreError> for CliError {
    fn from(e: pca_core::CoreError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<pca_graphs::GraphError> for CliError {
    fn from(e: pca_graphs::GraphError) -> Self {
        CliError::Validation(e.to_string())
    }
}
