use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Core(#[from] pca_core::CoreError),
    #[error(transparent)]
    Graph(#[from] pca_graphs::GraphError),
    #[error(transparent)]
    Engine(#[from] pca_engine::EngineError),
    #[error(transparent)]
    LocalField(#[from] pca_localfield::LfError),
    #[error(transparent)]
    Gauss(#[from] pca_gaussian::GaussError),
    #[error("blocks overlap at vertex {0}")]
    Overlap(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
