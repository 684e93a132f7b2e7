//! Command-line companion to `diagnosis-core`: file formats, batch
//! experiment runner, latency scaling scan, interactive sessions, and the
//! self-check suites behind the `diagnose` binary.
//!
//! The split follows the workspace rule: everything mathematical lives in
//! `diagnosis-core` (no_std + alloc); this crate owns IO — JSON loaders
//! and their validation, CSV/JSON artifact writers, wall clocks, thread
//! pools, and terminal interaction.
//!
//! Module map:
//!
//! * [`format`] — circuit / fault / model JSON files and their conversion
//!   into core types;
//! * [`experiment`] — the batch sweep over true (state, mode) pairs with
//!   CSV + JSON artifacts;
//! * [`timing`] — selection-latency scaling scan across mode counts;
//! * [`session`] — line-oriented interactive diagnosis protocol;
//! * [`verify`] — randomized self-check suites (definitional oracles,
//!   nonnegativity, selection-form agreement, factor chains, coverage
//!   bounds) shared by the `verify` subcommand and the acceptance tests;
//! * [`error`] — the CLI error type and its process exit codes.

pub mod error;
pub mod experiment;
pub mod format;
pub mod session;
pub mod timing;
pub mod verify;

pub use error::CliError;

/// Shipped example circuit: a two-generator distribution network with
/// eight buses, four controllable contactors, four health-unknown links,
/// and three fault-prone sensors (16 actions, 64 states).
pub const SMALL_CIRCUIT_JSON: &str = include_str!("../../../assets/small_circuit.json");

/// Shipped fault structure for [`SMALL_CIRCUIT_JSON`]: every sensor may
/// flip (probability 0.2) or stick at 1 (probability 0.4), giving 27 modes.
pub const SMALL_FAULTS_JSON: &str = include_str!("../../../assets/small_faults.json");
