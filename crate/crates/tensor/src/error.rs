use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{what} index {index} out of range for size {bound}")]
    IndexOutOfRange {
        what: &'static str,
        index: i64,
        bound: usize,
    },
    #[error("expected a scalar, found shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("backward already ran on this tape")]
    TapeConsumed,
    #[error("tensor is not attached to a gradient tape")]
    NotTracked,
    #[error("parameter {0} has no gradient; call backward first")]
    MissingGrad(usize),
    #[error("operands were recorded on different tapes")]
    TapeMismatch,
    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape {
        shape: Vec<usize>,
        reason: String,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

pub(crate) fn mismatch(op: &'static str, left: &[usize], right: &[usize]) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}
