//! Error type shared across the crate.
//!
//! A contradictory observation is the one *recoverable* condition: callers
//! that drive a belief from operator-entered readings keep the previous
//! belief and may retry. Everything else signals invalid inputs or a
//! search-space guard.

use alloc::string::String;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, DiagnosisError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosisError {
    /// The observed outcome has zero posterior mass under the current
    /// belief: no supported (state, mode) pair could have produced it.
    /// The belief that was being updated remains valid.
    #[error("contradictory observation: action {action} with outcome {outcome} has zero posterior mass")]
    Contradiction { action: usize, outcome: usize },

    /// Structural model validation failure (ids, table shape, ranges).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Probability data failed validation (negative mass, bad normalisation).
    #[error("invalid probabilities: {0}")]
    InvalidPrior(String),

    /// A sensor fault specification failed validation.
    #[error("invalid fault spec: {0}")]
    InvalidFaultSpec(String),

    /// A circuit description failed validation.
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// An index or id was outside the model it was used with.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A selection was requested but every action has been taken.
    #[error("no untaken actions remain")]
    ActionsExhausted,

    /// Policy execution requires a budget of at least one action.
    #[error("budget must be at least 1")]
    ZeroBudget,

    /// An enumeration (mode product, preimage, search tree, realization
    /// sweep) would exceed its configured cap.
    #[error("search space too large: {0}")]
    TooLarge(String),

    /// Degenerate numeric input (e.g. an all-zero mass vector).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}
