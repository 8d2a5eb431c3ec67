use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected} modes, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("trajectory too short: ends at t = {t_end}, requested t_min = {t_min}")]
    TrajectoryTooShort { t_end: f64, t_min: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
