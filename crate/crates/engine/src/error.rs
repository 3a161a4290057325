use pca_core::CoreError;
use pca_graphs::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exact law needs {required} support entries, budget is {budget}")]
    Budget { required: f64, budget: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empirical measures of different kinds: {0} vs {1}")]
    KindMismatch(String, String),
    #[error("empty input")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
