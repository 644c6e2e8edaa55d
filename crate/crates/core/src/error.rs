use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Contraction results only hold for `|n| < 1`.
    #[error("diffusion exponent n = {0} is outside (-1, 1)")]
    ExponentOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain of definition: {0}")]
    Domain(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("solver instability at t = {t}: {reason}")]
    Instability { t: f64, reason: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
