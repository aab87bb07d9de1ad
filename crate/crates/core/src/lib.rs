//! Practical phase-shift modelling and beamforming for intelligent
//! reflecting surfaces.
//!
//! * [`circuit`]: equivalent-circuit reflection coefficient of one element.
//! * [`phase_model`]: the amplitude-vs-phase model and its curve fit.
//! * [`channel`]: seeded Rayleigh channel realizations.
//! * [`beamform`]: MRT, rate evaluation, the per-element subproblem and the
//!   alternating optimizer.
//! * [`experiments`]: paired Monte Carlo comparison of design schemes.
//! * [`cli`]: the `irs` command-line front end.

pub mod beamform;
pub mod channel;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod phase;
pub mod phase_model;

pub use error::{IrsError, Result};
