use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solvers, the diagnostics and the file interfaces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("t = {t} lies outside the mesh interval [-{half_width}, {half_width}]")]
    Extrapolation { t: f64, half_width: f64 },

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("Newton iteration did not converge (last residual {residual:.3e} after {} iterations)", history.len())]
    NonConvergence { residual: f64, history: Vec<f64> },

    #[error("continuation stuck at {last_good} while heading to {target}: {reason}")]
    ContinuationStuck {
        last_good: f64,
        target: f64,
        reason: String,
    },

    #[error("background check failed: {0}")]
    Background(String),

    #[error("path bound violated at s = {s}: max q11 = {q11_max} exceeds tau = {tau}")]
    PathBound { s: f64, q11_max: f64, tau: f64 },

    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("volume search failed: {0}")]
    SearchFailure(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
