#![cfg_attr(not(test), no_std)]

//! Exact inference and action selection for active diagnosis when the
//! sensors themselves may be persistently faulty.
//!
//! The setting: a system is in one of finitely many health states `x ∈ X`,
//! observed through a bank of sensors whose joint fault configuration
//! `q ∈ Q` is also unknown but *persistent* (it does not change while we
//! probe). Each action `v ∈ V` deterministically produces a reading
//! `y = μ(v, x, q)`. Because the same reading can be explained by different
//! (state, mode) combinations, inference tracks one version space per mode,
//!
//! ```text
//! S_{t,q} = ∩_{i≤t} D(y_i, v_i, q),   D(y, v, q) = { x : μ(v, x, q) = y },
//! ```
//!
//! and the value of a probe sequence is the prior mass of states excluded
//! from the union ∪_q S_{t,q}. Everything here is exact: posteriors are
//! renormalised prior tables, expected gains are sums over the posterior
//! support, and policy values are prior-weighted enumerations over true
//! (state, mode) pairs — no sampling anywhere.
//!
//! Module map:
//!
//! * [`bitset`] — fixed-width state sets, the version-space representation;
//! * [`model`] — the compiled model (prior, outcome table) and belief state;
//! * [`fault`] — sensor fault kinds, mode enumeration, corruption and its
//!   preimage, compilation of a healthy table + fault spec into a model;
//! * [`circuit`] — a small power-distribution circuit simulator that
//!   produces healthy outcome tables;
//! * [`policy`] — expected marginal benefit, the two greedy selection
//!   forms, policy execution, and the exact adaptive optimum;
//! * [`factor`] — the per-outcome gain decomposition, the submodularity
//!   factor sweeps, and the greedy guarantee bound;
//! * [`generate`] — seeded random instances for the verification suites.
//!
//! The crate is `no_std` + `alloc`; anything that needs a clock receives
//! one as a closure, and file formats, CSV output, and the CLI live in the
//! companion `diagnosis-cli` crate.

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod bitset;
pub mod circuit;
pub mod error;
pub mod factor;
pub mod fault;
pub mod generate;
pub mod model;
pub mod policy;

pub use bitset::StateSet;
pub use error::{DiagnosisError, Result};
pub use model::{BeliefState, DiagnosisModel, PosteriorTable};

/// Absolute tolerance for every floating-point comparison in this crate
/// and its verification suites: probabilities, rewards, factor chains.
pub const TOLERANCE: f64 = 1e-9;
