use thiserror::Error;

/// Errors raised by tensor construction, graph recording, backward passes and
/// the optimizers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("singular matrix: pivot magnitude {pivot:e} below threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("domain error in `{op}`: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("non-finite value produced by `{0}`")]
    NonFinite(&'static str),

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("node {0} is not a leaf variable")]
    NotALeaf(usize),

    #[error("degenerate reflector: vector norm {0:e} too small")]
    DegenerateReflector(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operation `{0}` is not supported by this backend")]
    Unsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
