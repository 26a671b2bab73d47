use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A problem file could not be decoded. `field` names the offending field.
    #[error("parse error in `{field}`: {msg}")]
    Parse { field: String, msg: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(
        "enumeration budget exceeded: more than {limit} assignments (counted at least {counted})"
    )]
    BudgetExceeded { limit: u64, counted: u64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("degenerate quadric: {0}")]
    DegenerateQuadric(String),

    #[error("untriangulatable detection: disparity {disparity} px")]
    Untriangulatable { disparity: f64 },

    #[error("scenario config: `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
