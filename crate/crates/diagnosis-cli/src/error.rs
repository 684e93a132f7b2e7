//! CLI error type and its mapping to process exit codes.

use std::path::PathBuf;

use diagnosis_core::DiagnosisError;

/// Process exit code for success.
pub const EXIT_OK: i32 = 0;
/// Process exit code for input or validation failures (bad files, bad
/// references, core model validation errors).
pub const EXIT_VALIDATION: i32 = 1;
/// Process exit code when a mathematical invariant the self-check suites
/// assert is violated on a generated instance.
pub const EXIT_INVARIANT: i32 = 2;
/// Process exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 64;

/// Everything the CLI can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// File system failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON syntax or shape error, annotated with the path (the source
    /// error carries line and column).
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Semantic validation failure in a loaded file, naming the offending
    /// entry.
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },

    /// Errors bubbled up from the core library (model validation, size
    /// caps, contradictions).
    #[error(transparent)]
    Core(#[from] DiagnosisError),

    /// A self-check suite found a violated invariant; the message carries
    /// the serialized witness.
    #[error("invariant violation in {suite}: {witness}")]
    Violation { suite: &'static str, witness: String },
}

impl CliError {
    /// Helper for path-annotated IO errors.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Helper for path-annotated validation errors.
    pub fn invalid(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The process exit code this error maps to: invariant violations are
    /// distinguished from input problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation { .. } => EXIT_INVARIANT,
            _ => EXIT_VALIDATION,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CliError>;
