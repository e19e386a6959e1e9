use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("gate refused: {0}")]
    Gate(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: String, iterations: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("overflow guard tripped: {0}")]
    Overflow(String),
    #[error("root collision: {0}")]
    Collision(String),
    #[error("under-resolved: {0}")]
    Underresolved(String),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, last_good: Box<(Vec<f64>, Vec<f64>)> },
}

pub type Result<T> = std::result::Result<T, Error>;
