use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("insufficient rows: need at least {needed}, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("design matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed input data. The message names the file and line.
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InsufficientRows { .. } => "insufficient_rows",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Precondition(_) => "precondition",
            Error::Data(_) => "data",
            Error::Io { .. } => "io",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
