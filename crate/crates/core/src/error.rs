use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Ingestion,
    Numeric,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Ingestion => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Row numbers are 1-based data rows (the header is not counted).
    #[error("row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("unknown participant id `{0}`")]
    UnknownId(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("perfect separation detected on term(s): {}", .terms.join(", "))]
    Separation { terms: Vec<String> },

    #[error("design matrix is rank deficient; collinear term(s): {}", .terms.join(", "))]
    RankDeficient { terms: Vec<String> },

    #[error("degenerate null distribution: {0}")]
    DegenerateNull(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn ingest(row: usize, message: impl Into<String>) -> Self {
        Error::Ingest {
            row,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Unsupported(_) | Error::Type(_) => ErrorClass::Usage,
            Error::Ingest { .. } | Error::Input(_) | Error::UnknownId(_) | Error::Csv(_) => {
                ErrorClass::Ingestion
            }
            Error::Json(_) | Error::Io(_) => ErrorClass::Io,
            Error::Undefined(_)
            | Error::Separation { .. }
            | Error::RankDeficient { .. }
            | Error::DegenerateNull(_)
            | Error::NonConvergence(_)
            | Error::Size(_)
            | Error::Numeric(_) => ErrorClass::Numeric,
        }
    }
}
