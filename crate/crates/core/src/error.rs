use thiserror::Error;

/// Errors raised by the learners and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation before any computation started.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    /// An enumeration or allocation would exceed a configured cap.
    #[error("{what} requires {required} entries, above the cap of {cap}")]
    Resource {
        what: String,
        required: f64,
        cap: f64,
    },

    /// The caller passed inputs that do not fit together (shapes, counts).
    #[error("usage error: {0}")]
    Usage(String),

    /// The data itself is unusable (non-finite values, bad labels).
    #[error("data error: {0}")]
    Data(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn resource(what: impl Into<String>, required: f64, cap: f64) -> Self {
        Error::Resource {
            what: what.into(),
            required,
            cap,
        }
    }
}
