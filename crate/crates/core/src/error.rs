use thiserror::Error;

/// Errors raised by the numerical kernels and their I/O front ends.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid family descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("tolerance {rel_tol:e} unreachable within truncation cap {cap} ({what})")]
    ToleranceUnreachable {
        what: &'static str,
        rel_tol: f64,
        cap: usize,
    },

    #[error("value out of representable range: {0}")]
    Overflow(String),

    #[error("evaluation point out of range: {0}")]
    OutOfRange(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that signal a numerical tolerance could not be met.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_) | Error::ToleranceUnreachable { .. } | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
