//! Gaussian-process regression.
//!
//! Inputs are expected on a normalized box (the harness maps every objective
//! domain onto `[0, 1]^d`); the prior mean is a fixed constant and kernels are
//! isotropic.

mod hyper;
mod kernel;
mod model;

pub use hyper::{optimize_hyperparameters, HyperBounds, HyperFit};
pub use kernel::{composite_kernel, kernel_eval, matern25_unit, KernelKind, KernelParams};
pub use model::{
    fit, training_covariance, Dataset, FittedGp, GpConfig, Prediction, NEGATIVE_VARIANCE_TOL,
};
