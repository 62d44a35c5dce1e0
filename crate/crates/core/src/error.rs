use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate element{}: det J = {det:e}", element.map(|e| format!(" {e}")).unwrap_or_default())]
    DegenerateElement { element: Option<usize>, det: f64 },

    #[error("mesh format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unknown boundary set `{name}` (available: {})", available.join(", "))]
    UnknownBoundarySet { name: String, available: Vec<String> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("divergence at iteration {iteration} during {stage}")]
    Divergence { iteration: usize, stage: String },

    #[error("oracle failure at time step {step}: {message}")]
    Oracle { step: usize, message: String },

    #[error("internal fault: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
