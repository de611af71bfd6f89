use thiserror::Error;

#[derive(Debug, Error)]
pub enum OsirError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "covariance is numerically singular (smallest pivot {pivot:.3e} < {threshold:.3e}); \
         raise the ridge"
    )]
    SingularCovariance { pivot: f64, threshold: f64 },

    #[error("difference form is only available for overlap levels 1 and 2, got {0}")]
    UnsupportedLevel(usize),

    #[error("all eigenvalues are zero; dimension cannot be selected")]
    DegenerateSpectrum,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("ingestion failed: {0}")]
    Ingest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OsirError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(OsirError::InvalidInput(msg.into()))
}
