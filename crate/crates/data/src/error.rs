use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> DataError {
        DataError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn schema(row: usize, message: impl Into<String>) -> DataError {
        DataError::Schema {
            row,
            message: message.into(),
        }
    }
}
