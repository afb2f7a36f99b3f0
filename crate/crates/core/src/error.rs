use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse {
        /// 1-based data row (the header is row 0).
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("not enough {what}: requested {requested}, available {available}")]
    Capacity {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("training set has no positive rows; the minority class is empty")]
    EmptyMinority,

    #[error("nothing to balance: {positives} positives vs {negatives} negatives")]
    NothingToBalance { positives: usize, negatives: usize },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("AUC is undefined when the truth contains a single class")]
    UndefinedAuc,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
