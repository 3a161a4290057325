use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("offspring pmf invalid: {0}")]
    Pmf(String),
    #[error("degree sum {0} is odd")]
    OddDegreeSum(usize),
    #[error("no simple pairing found in {0} proposals")]
    RetryCapExceeded(usize),
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(usize),
    #[error("edge ({0}, {1}) is a self-loop or repeated")]
    BadEdge(usize, usize),
    #[error("tree axiom violated: {0}")]
    NotATree(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
