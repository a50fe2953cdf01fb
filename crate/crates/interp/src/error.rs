use std::fmt;

use mlang_data::DataError;
use mlang_model::ModelError;
use mlang_syntax::{SourceMap, SourceSpan};
use mlang_tensor::TensorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    TypeError,
    NameError,
    ValueError,
    ArityError,
    ShapeMismatch,
    IndexOutOfRange,
    TapeConsumed,
    IoError,
    FormatError,
    SchemaError,
    UnknownModel,
    UnknownVersion,
    UnsupportedScheme,
    ColumnMismatch,
    UnknownMetric,
    EmptySpace,
    RecursionLimit,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::TypeError => "TypeError",
            ErrorKind::NameError => "NameError",
            ErrorKind::ValueError => "ValueError",
            ErrorKind::ArityError => "ArityError",
            ErrorKind::ShapeMismatch => "ShapeMismatch",
            ErrorKind::IndexOutOfRange => "IndexOutOfRange",
            ErrorKind::TapeConsumed => "TapeConsumed",
            ErrorKind::IoError => "IoError",
            ErrorKind::FormatError => "FormatError",
            ErrorKind::SchemaError => "SchemaError",
            ErrorKind::UnknownModel => "UnknownModel",
            ErrorKind::UnknownVersion => "UnknownVersion",
            ErrorKind::UnsupportedScheme => "UnsupportedScheme",
            ErrorKind::ColumnMismatch => "ColumnMismatch",
            ErrorKind::UnknownMetric => "UnknownMetric",
            ErrorKind::EmptySpace => "EmptySpace",
            ErrorKind::RecursionLimit => "RecursionLimit",
        }
    }

    pub fn of_tensor(e: &TensorError) -> ErrorKind {
        match e {
            TensorError::ShapeMismatch { .. } | TensorError::InvalidShape { .. } | TensorError::NotScalar(_) => {
                ErrorKind::ShapeMismatch
            }
            TensorError::IndexOutOfRange { .. } => ErrorKind::IndexOutOfRange,
            TensorError::TapeConsumed => ErrorKind::TapeConsumed,
            TensorError::NotTracked
            | TensorError::MissingGrad(_)
            | TensorError::TapeMismatch
            | TensorError::InvalidArgument(_) => ErrorKind::ValueError,
        }
    }

    pub fn of_data(e: &DataError) -> ErrorKind {
        match e {
            DataError::Io { .. } => ErrorKind::IoError,
            DataError::Schema { .. } => ErrorKind::SchemaError,
            DataError::Invalid(_) => ErrorKind::ValueError,
        }
    }

    pub fn of_model(e: &ModelError) -> ErrorKind {
        match e {
            ModelError::ShapeMismatch { .. } => ErrorKind::ShapeMismatch,
            ModelError::Node { source, .. } | ModelError::Tensor(source) => ErrorKind::of_tensor(source),
            ModelError::Data(d) => ErrorKind::of_data(d),
            ModelError::Io { .. } => ErrorKind::IoError,
            ModelError::UnknownModel(_) => ErrorKind::UnknownModel,
            ModelError::UnknownVersion { .. } => ErrorKind::UnknownVersion,
            ModelError::UnsupportedScheme { .. } => ErrorKind::UnsupportedScheme,
            ModelError::Format(_) => ErrorKind::FormatError,
            ModelError::ColumnMismatch(_) => ErrorKind::ColumnMismatch,
            ModelError::UnknownMetric(_) => ErrorKind::UnknownMetric,
            ModelError::UnknownParam(_) => ErrorKind::NameError,
            ModelError::EmptySpace => ErrorKind::EmptySpace,
            ModelError::Custom { .. } | ModelError::Invalid(_) => ErrorKind::ValueError,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of a runtime stack trace: the function that was executing and
/// where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub function: String,
    pub span: SourceSpan,
}

/// A runtime failure with its trace, innermost frame first.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub message: String,
    pub frames: Vec<Frame>,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> RuntimeError {
        RuntimeError {
            kind,
            message: message.into(),
            frames: Vec::new(),
        }
    }

    pub fn at(mut self, function: &str, span: SourceSpan) -> RuntimeError {
        self.frames.push(Frame {
            function: function.to_string(),
            span,
        });
        self
    }

    /// Error kind, message, then one `at function (file:line:col)` line per
    /// frame. Frames without a source location (host calls) are skipped.
    pub fn render(&self, sources: &SourceMap) -> String {
        let mut out = format!("error[{}]: {}", self.kind, self.message);
        let located = || self.frames.iter().filter(|f| f.span.start_line > 0);
        for f in located() {
            out.push_str(&format!(
                "\n  at {} ({}:{}:{})",
                f.function,
                sources.name(f.span.file_id),
                f.span.start_line,
                f.span.start_col
            ));
        }
        if let Some(first) = located().next() {
            if let Some(file) = sources.get(first.span.file_id) {
                let snip = mlang_syntax::snippet(&file.text, &first.span);
                if !snip.is_empty() {
                    out.push('\n');
                    out.push_str(&snip);
                }
            }
        }
        out
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for RuntimeError {}

impl From<TensorError> for RuntimeError {
    fn from(e: TensorError) -> Self {
        RuntimeError::new(ErrorKind::of_tensor(&e), e.to_string())
    }
}

impl From<DataError> for RuntimeError {
    fn from(e: DataError) -> Self {
        RuntimeError::new(ErrorKind::of_data(&e), e.to_string())
    }
}

impl From<ModelError> for RuntimeError {
    fn from(e: ModelError) -> Self {
        let kind = ErrorKind::of_model(&e);
        let message = match &e {
            ModelError::UnknownModel(_) => format!("{e} (seed the registry with `m model seed`)"),
            _ => e.to_string(),
        };
        RuntimeError::new(kind, message)
    }
}

pub type Result<T> = std::result::Result<T, RuntimeError>;

pub(crate) fn type_error(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorKind::TypeError, msg)
}

pub(crate) fn value_error(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorKind::ValueError, msg)
}
