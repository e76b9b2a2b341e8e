//! Bayesian optimization with a Gaussian-process surrogate whose
//! exploration weight κ and uncertainty-penalty weight λ adapt online.
//!
//! The crate is organized bottom-up:
//!
//! * [`gp`]: kernels, exact posterior inference, marginal likelihood and
//!   hyperparameter fitting.
//! * [`acquisition`]: UCB, expected improvement and the curvature-penalized
//!   adaptive acquisition.
//! * [`adaptive`]: the κ/λ update rules and the Monte-Carlo integrated
//!   variance.
//! * [`search`]: Sobol global search plus bounded quasi-Newton refinement.
//! * [`benchmarks`]: test objectives and noisy evaluation.
//! * [`harness`]: optimization loop, baselines, metrics and file outputs.

pub mod acquisition;
pub mod adaptive;
pub mod benchmarks;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod optim;
pub mod search;

pub use domain::Domain;
pub use error::{Error, Result};
