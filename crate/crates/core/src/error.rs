use thiserror::Error;

/// Errors raised across the solver, simulator and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown treatment label `{0}` (expected RR, AR, RA or AA)")]
    UnknownTreatment(String),

    #[error("{value} is outside the curve domain [0, {bound}]")]
    OutOfDomain { value: String, bound: String },

    #[error("profile space has {required} profiles, cap is {cap}; raise the cap to at least {required}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
