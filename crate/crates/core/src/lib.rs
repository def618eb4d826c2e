//! Stability laboratory for stochastic reaction-diffusion equations on an
//! interval.
//!
//! The crate simulates scalar SDEs and one-dimensional SPDEs driven by
//! additive, multiplicative, Gaussian-random-field, and space-time white
//! noise, evaluates closed-form stability criteria on concrete parameters,
//! and verifies predicted mean-square decay rates, probability bounds, and
//! pathwise comparison orderings by Monte Carlo against exact reference
//! curves.
//!
//! Module map:
//! - [`lattice`]: interval grid, discrete Laplacian and p-Laplacian,
//!   principal eigenpair, and the `k_eps` regularization utility.
//! - [`noise`]: reproducible Wiener, Gaussian-field, and space-time white
//!   noise increments.
//! - [`evolve`]: semi-implicit Euler-Maruyama time integration, coupled
//!   (shared-driver) runs, and ensemble execution.
//! - [`oracle`]: closed-form second-moment curves for the linear submodels.
//! - [`stats`]: ensemble estimators (mean-square norms, decay-rate fits,
//!   exceedance probabilities).
//! - [`criteria`]: exact evaluation of the stability criteria, independent
//!   of any simulation.
//! - [`scenarios`]: named experiments tying a criterion verdict to a
//!   simulated measurement.

pub mod criteria;
pub mod error;
pub mod evolve;
pub mod lattice;
pub mod noise;
pub mod oracle;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};
