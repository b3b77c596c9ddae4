use std::path::PathBuf;

use crate::model::{ElementId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("unknown element {0}")]
    UnknownElement(ElementId),

    #[error("invalid advice: {0}")]
    InvalidAdvice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("set function table is missing {missing} of {expected} subsets")]
    IncompleteTable { missing: usize, expected: usize },

    #[error("enumeration too large: {count} > {limit} ({what})")]
    EnumerationTooLarge { what: &'static str, count: u128, limit: u128 },

    #[error("{}", schema_message(.line, .field, .message))]
    Schema {
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn schema_message(line: &Option<usize>, field: &str, message: &str) -> String {
    match line {
        Some(line) => format!("line {line}: {field}: {message}"),
        None => format!("{field}: {message}"),
    }
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInstance(_)
                | Error::InvalidSelection(_)
                | Error::UnknownElement(_)
                | Error::InvalidAdvice(_)
                | Error::InvalidArgument(_)
                | Error::IncompleteTable { .. }
                | Error::Schema { .. }
                | Error::Validation(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
