use pca_core::CoreError;
use pca_engine::EngineError;
use pca_gaussian::GaussError;
use pca_graphs::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LfError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("no population mass for conditioning key {key} at time {time}")]
    KeyMiss { time: usize, key: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant broken: {0}")]
    Invariant(String),
}
