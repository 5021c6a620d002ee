use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("offset {offset} is outside {range} on edge `{edge}` of length {length}")]
    OffsetOutOfRange {
        edge: String,
        offset: f64,
        length: f64,
        range: &'static str,
    },

    #[error("invalid point `{0}`: expected `edgeId:offset`")]
    InvalidPoint(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("invalid surgery: {0}")]
    InvalidSurgery(String),

    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),

    #[error(
        "spectral solver did not converge after {rounds} refinements \
         (last estimate {estimate}, error estimate {error_estimate})"
    )]
    NoConvergence {
        rounds: usize,
        estimate: f64,
        error_estimate: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
