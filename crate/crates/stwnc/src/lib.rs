//! Tempered MCMC without normalizing constants.
//!
//! The crate samples tempered posteriors `P(Y|theta)^tau P(theta)` with three
//! algorithms:
//!
//! * simulated tempering whose prior on `tau` is defined through the profile
//!   optimum `theta_max(tau)`, so no normalizing constant is ever needed;
//! * the two-chain hybrid that pairs such a chain with a chain pinned at
//!   `tau = 1` ([`tempering::run_pt_stwnc`]);
//! * classical parallel tempering on a fixed schedule
//!   ([`tempering::run_standard_pt`]).
//!
//! Log marginal likelihoods are estimated by thermodynamic integration
//! ([`evidence`]). Three models ship with the crate: a bimodal Gaussian, a
//! Gaussian mixture for the galaxy velocity data and an SIR epidemic ODE.

pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod evidence;
pub mod interpolate;
pub mod math;
pub mod model;
pub mod models;
pub mod ode;
pub mod optimize;
pub mod params;
pub mod profile;
pub mod tempering;
pub mod trace;

pub use error::{Error, Result};
pub use model::{tempered_log_posterior, TargetModel};
pub use params::{InverseTemperature, ParameterVector};
