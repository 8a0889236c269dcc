use thiserror::Error;

use crate::eigen::EigenError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid rational approximant R = {r}, M = {m}: {reason}")]
    InvalidApproximant { r: usize, m: usize, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("eigensolver failed at k = {k}: {source}")]
    EigenAtK {
        k: f64,
        #[source]
        source: EigenError,
    },
    #[error("perturbation theory not applicable: {0}")]
    PerturbationInvalid(String),
    #[error("insufficient data: {0}")]
    Diagnostics(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_k(k: f64) -> impl FnOnce(EigenError) -> Error {
        move |source| Error::EigenAtK { k, source }
    }
}
