//! Harmonic measure on critical Galton–Watson trees.
//!
//! The crate computes the exponent β that governs how harmonic measure on
//! generation `n` of a large critical tree concentrates on roughly `n^β`
//! vertices, by three independent formulas over the limiting conductance law,
//! and checks the discrete and continuum statements at desk scale:
//!
//! * [`offspring`]: critical offspring laws, generating functions, `q_n`.
//! * [`trees`]: arena plane trees, conditioned samplers, reduced trees.
//! * [`network`]: conductances and exact harmonic measure by current splitting.
//! * [`rde`]: particle solver for the conductance fixed point and its checks.
//! * [`beta`]: three estimators of β with cross-validation.
//! * [`continuum`]: the continuum reduced tree and its ball-mass exponents.
//! * [`experiments`]: end-to-end drivers producing serializable reports.
//! * [`cli`]: the `gwh` command-line front end.

pub mod beta;
pub mod cli;
pub mod continuum;
pub mod error;
pub mod experiments;
pub mod network;
pub mod offspring;
pub mod rde;
pub mod rng;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};
pub use offspring::OffspringDistribution;
pub use rng::Seed;
