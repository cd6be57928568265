use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The generator does not have a unique stationary state, or a solve on
    /// the traceless subspace was singular.
    #[error("degenerate generator: {0}")]
    Degenerate(String),

    /// The resolvent was requested at (or numerically on top of) an eigenvalue.
    #[error("resolvent pole at z = {z}")]
    ResolventPole { z: Complex64 },

    /// A frequency grid does not extend far enough to capture the spectrum.
    #[error("grid does not cover the spectrum: boundary density {boundary:e} vs peak {peak:e}")]
    GridCoverage { boundary: f64, peak: f64 },

    /// A line shape could not be assigned to any class.
    #[error("ambiguous line shape: even fraction {even_fraction:.3}, odd fraction {odd_fraction:.3}")]
    Classification {
        even_fraction: f64,
        odd_fraction: f64,
    },

    /// The ladder weight in a filter passband is too small to form a ratio.
    #[error("enhancement undefined: ladder weight {0:e} in passband")]
    UndefinedEnhancement(f64),

    /// Bad run configuration (unknown key, unparsable value, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
