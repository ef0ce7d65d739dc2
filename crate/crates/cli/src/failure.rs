use std::fmt;

use mzq_core::Error;

/// Configuration, parse or validation problem.
pub const EXIT_CONFIG: i32 = 2;
/// The forward model hit a degenerate scatterer or a singular port system.
pub const EXIT_DEGENERATE: i32 = 3;
/// An estimator failed to produce a result.
pub const EXIT_FIT: i32 = 4;

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }

    /// Combines several failures into one, keeping the most fundamental code.
    pub fn combine(failures: Vec<Failure>) -> Option<Failure> {
        let code = failures.iter().map(|f| f.code).min()?;
        let message = failures
            .into_iter()
            .map(|f| f.message)
            .collect::<Vec<_>>()
            .join("\n");
        Some(Failure { code, message })
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::DegenerateScatterer { .. } | Error::SingularSystem { .. } | Error::DegenerateFlux { .. } => {
            EXIT_DEGENERATE
        }
        Error::NoConvergence { .. } | Error::BadInitialization | Error::NoFeature => EXIT_FIT,
        _ => EXIT_CONFIG,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::config(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, Failure>;
