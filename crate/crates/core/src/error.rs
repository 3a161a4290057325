use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
    #[error("trajectory length mismatch: own has {own} states, neighbor {index} has {other}")]
    LengthMismatch { own: usize, index: usize, other: usize },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("trajectory mixes cemetery and live states")]
    MixedCemetery,
    #[error("own trajectory is at the cemetery state")]
    OwnAtCemetery,
    #[error("neighbor {0} is at the cemetery state")]
    NeighborAtCemetery(usize),
    #[error("kernel row not normalized (sum {sum}) at k={k}")]
    NotNormalized { k: usize, sum: f64 },
    #[error("kernel row has negative or non-finite entry {value} at k={k}")]
    BadProbability { k: usize, value: f64 },
    #[error("rule output {0} is not a live symbol of the alphabet")]
    BadOutput(u8),
    #[error("state kind does not match the rule: {0}")]
    KindMismatch(String),
    #[error("no kernel row for k={k}, own={own}, histogram={hist:?}")]
    MissingRow { k: usize, own: String, hist: Vec<u32> },
    #[error("rule file error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
}
