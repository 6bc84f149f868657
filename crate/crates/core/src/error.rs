use thiserror::Error;

use crate::green::GreenTensor;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (bad mode index,
    /// non-positive size, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The working wavenumber sits on a mode cutoff, where the guided
    /// Green function diverges.
    #[error("wavenumber {k} coincides with the cutoff of {mode}")]
    SingularMode { mode: String, k: f64 },

    /// The damped image-lattice sum did not settle between its last two
    /// extrapolation orders.
    #[error("image lattice sum not converged: relative change {relative_change:.3e}")]
    Convergence {
        relative_change: f64,
        last: Box<GreenTensor>,
        previous: Box<GreenTensor>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solve failed: {reason} (relative residual {residual:.3e})")]
    Solver { reason: String, residual: f64 },

    #[error("time integration failed: {0}")]
    Integration(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("{0}")]
    Parse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status for this error class: 2 configuration, 3
    /// numerical failure, 4 IO failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Configuration(_) | Error::Parse(_) | Error::Domain(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }

    /// Short machine-readable class name, used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::SingularMode { .. } => "singular_mode",
            Error::Convergence { .. } => "convergence",
            Error::Precondition(_) => "precondition",
            Error::Solver { .. } => "solver",
            Error::Integration(_) => "integration",
            Error::Configuration(_) => "configuration",
            Error::Measurement(_) => "measurement",
            Error::Fit(_) => "fit",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
        }
    }
}
