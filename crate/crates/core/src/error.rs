use thiserror::Error;

/// Errors raised by the forward model, the physics helpers and the fitters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cascade of zero transfer matrices")]
    EmptyCascade,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("port system is numerically singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("qubit transmission |t| = {t_abs:.3e} is below the degeneracy threshold")]
    DegenerateScatterer { t_abs: f64 },

    #[error("flux bias {flux} sits at a half-integer flux quantum")]
    DegenerateFlux { flux: f64 },

    #[error("quasi-static Ornstein-Uhlenbeck spectrum has no pointwise value at zero frequency")]
    QuasiStaticLimit,

    #[error("{source} (at {freq_hz} Hz)")]
    AtFrequency {
        freq_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("initial residual is not finite")]
    BadInitialization,

    #[error("ill-posed fit: {0}")]
    IllPosed(String),

    #[error("no resonance feature above the noise floor")]
    NoFeature,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_frequency(self, freq_hz: f64) -> Self {
        Error::AtFrequency {
            freq_hz,
            source: Box::new(self),
        }
    }

    /// Strips any frequency context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrequency { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
