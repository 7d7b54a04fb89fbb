//! Behavior-aware auxiliary corrections for off-policy temporal-difference
//! prediction with linear function approximation.
//!
//! The crate has three layers:
//!
//! * low-level dense numerics ([`numkit`]) and finite-MDP machinery ([`mdp`]),
//! * the seven per-transition learners ([`learners`]) together with the exact
//!   mean-system analysis of their deterministic dynamics ([`spectra`]),
//! * benchmark construction ([`benchmarks`]), metrics ([`metrics`]) and the
//!   seeded sweep/evaluation harness ([`harness`]).
//!
//! Everything is deterministic given a base seed: repeated runs produce
//! byte-identical outputs regardless of worker count.

pub mod benchmarks;
mod error;
pub mod harness;
pub mod learners;
pub mod mdp;
pub mod metrics;
pub mod numkit;
pub mod spectra;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
