use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "target frequency {target:.6e} Hz is at or above the zero-area ceiling {ceiling:.6e} Hz"
    )]
    UnreachableFrequency { target: f64, ceiling: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("phase fit unstable: {0}")]
    FitInstability(String),

    #[error("nonphysical internal quality factor: 1/Q_l = {inv_loaded:.6e} <= cos(phi)/|Q_e| = {coupling:.6e}")]
    NonphysicalQin { inv_loaded: f64, coupling: f64 },

    #[error("no resonance found in trace: {0}")]
    NoResonance(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("model evaluation produced non-finite values: {0}")]
    ModelEvaluation(String),

    #[error("schema error: {message} (columns: {columns:?})")]
    Schema {
        message: String,
        columns: Vec<String>,
    },

    #[error("frequencies not strictly increasing at data row {row}")]
    Ordering { row: usize },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures that mean "the fit did not converge" rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoResonance(_) | Error::FitInstability(_) | Error::NonphysicalQin { .. }
        )
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
