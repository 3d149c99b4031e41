//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. `path` names the offending
    /// key (e.g. `scenario.priors`); the CLI maps this variant to exit
    /// code 2.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    /// No point satisfies the requested geometric constraints. The CLI
    /// maps this variant to exit code 3.
    #[error("infeasible geometry: {0}")]
    Infeasible(String),

    /// An operation received arguments violating its preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector lengths disagree (observation vs. mean vs. RSU count).
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A source location sits closer than the pathloss model allows.
    #[error("source at ({x}, {y}) is within {d_min} m of RSU {rsu}; the pathloss model diverges near an antenna")]
    TooCloseToRsu { x: f64, y: f64, rsu: usize, d_min: f64 },

    /// Regression inputs admit no unique line (all distances equal).
    #[error("singular fit: {0}")]
    SingularFit(String),

    /// A labeled dataset contains only one class where both are required.
    #[error("dataset contains a single class; both legitimate and malicious samples are required")]
    SingleClass,

    /// Training hit a non-finite loss.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A malformed record in a CSV input.
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prepends `prefix.` to the key path of a [`Error::Config`]; other
    /// variants pass through. Lets nested validators report full paths.
    pub fn prefix_path(self, prefix: &str) -> Self {
        match self {
            Error::Config { path, message } => Error::Config {
                path: if path.is_empty() {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{path}")
                },
                message,
            },
            other => other,
        }
    }
}
