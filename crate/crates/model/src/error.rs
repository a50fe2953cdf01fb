use mlang_data::DataError;
use mlang_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("shape mismatch at node `{node}`: expected {expected}, found {found:?}")]
    ShapeMismatch {
        node: String,
        expected: String,
        found: Vec<usize>,
    },
    #[error("at node `{node}`: {source}")]
    Node { node: String, source: TensorError },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{name}` has no version {version}")]
    UnknownVersion { name: String, version: u32 },
    #[error("unsupported URL scheme in `{url}`: {hint}")]
    UnsupportedScheme { url: String, hint: String },
    #[error("malformed model manifest: {0}")]
    Format(String),
    #[error("dataset does not fit the model: {0}")]
    ColumnMismatch(String),
    #[error("unknown metric `{0}` (expected accuracy, f1, mse or r2)")]
    UnknownMetric(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("hyperparameter space is empty")]
    EmptySpace,
    #[error("custom function `{name}` failed: {message}")]
    Custom { name: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ModelError {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> ModelError {
        ModelError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn shape(node: &str, expected: impl Into<String>, found: &[usize]) -> ModelError {
        ModelError::ShapeMismatch {
            node: node.to_string(),
            expected: expected.into(),
            found: found.to_vec(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
