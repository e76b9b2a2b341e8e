//! Acquisition functions: fixed-κ UCB, expected improvement, and the
//! uncertainty-penalized adaptive acquisition
//!
//! ```text
//! α(x) = μ(x) + κ σ(x) − λ U(x),   U(x) = σ²(x) · C(x),
//! C(x) = Σ_i max(|eig_i(∇²μ(x))|, ε)
//! ```
//!
//! All functions are written for maximization.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::gp::FittedGp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionParams {
    pub kappa: f64,
    pub lambda_pen: f64,
    /// Eigenvalue floor in the complexity factor.
    pub eps_eig: f64,
    /// Finite-difference step for the posterior-mean Hessian.
    pub fd_step: f64,
}

impl Default for AcquisitionParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            lambda_pen: 0.0,
            eps_eig: 1e-6,
            fd_step: 1e-4,
        }
    }
}

impl AcquisitionParams {
    pub fn new(kappa: f64, lambda_pen: f64) -> Self {
        Self {
            kappa,
            lambda_pen,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.lambda_pen >= 0.0 && self.eps_eig > 0.0 && self.fd_step > 0.0)
        {
            return Err(Error::InvalidInput(format!("invalid acquisition parameters {self:?}")));
        }
        Ok(())
    }
}

/// Symmetric `d × d` finite-difference Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianEstimate {
    pub matrix: DMatrix<f64>,
}

pub fn ucb(mean: f64, sd: f64, kappa: f64) -> f64 {
    mean + kappa * sd
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `E[max(f − f_best, 0)]` for `f ~ N(mean, sd²)`.
pub fn expected_improvement(mean: f64, sd: f64, f_best: f64) -> f64 {
    let gain = mean - f_best;
    if sd <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    (gain * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Forward-difference Hessian of `f` at `x`:
///
/// `H_ij ≈ [f(x + h e_i + h e_j) − f(x + h e_i) − f(x + h e_j) + f(x)] / h²`
///
/// When `bounds` is given the stencil base is shifted so every evaluation
/// point lies inside the box. Uses `(d² + 3d)/2 + 1` evaluations.
pub fn hessian_fd<F>(mut f: F, x: &[f64], h: f64, bounds: Option<&Domain>) -> Result<HessianEstimate>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x.len();
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be > 0, got {h}")));
    }
    let mut base = x.to_vec();
    if let Some(b) = bounds {
        check_dim(b.dim(), d)?;
        for i in 0..d {
            if b.width(i) < 2.0 * h {
                return Err(Error::InvalidInput(format!(
                    "domain width in coordinate {i} is smaller than the stencil"
                )));
            }
            base[i] = base[i].clamp(b.lower()[i], b.upper()[i] - 2.0 * h);
        }
    }

    let mut eval = |p: &[f64]| -> Result<f64> {
        let v = f(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("non-finite function value at {p:?}")))
        }
    };

    let f0 = eval(&base)?;
    let mut probe = base.clone();
    let mut single = vec![0.0; d];
    let mut double = vec![0.0; d];
    for i in 0..d {
        probe[i] = base[i] + h;
        single[i] = eval(&probe)?;
        probe[i] = base[i] + 2.0 * h;
        double[i] = eval(&probe)?;
        probe[i] = base[i];
    }

    let h2 = h * h;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = (double[i] - 2.0 * single[i] + f0) / h2;
        for j in 0..i {
            probe[i] = base[i] + h;
            probe[j] = base[j] + h;
            let fij = eval(&probe)?;
            probe[i] = base[i];
            probe[j] = base[j];
            let v = (fij - single[i] - single[j] + f0) / h2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(HessianEstimate { matrix })
}

/// `Σ_i max(|λ_i|, eps_eig)` over the eigenvalues of the symmetric `H`.
pub fn complexity_factor(hessian: &HessianEstimate, eps_eig: f64) -> Result<f64> {
    let m = &hessian.matrix;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Hessian has non-finite entries".into()));
    }
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let c: f64 = eig.iter().map(|l| l.abs().max(eps_eig)).sum();
    if c.is_finite() && c > 0.0 {
        Ok(c)
    } else {
        Err(Error::Numerical("eigen-decomposition failed".into()))
    }
}

fn mean_hessian(gp: &FittedGp, x: &[f64], h: f64, bounds: Option<&Domain>) -> Result<HessianEstimate> {
    check_dim(gp.dim(), x.len())?;
    // dimensions are checked above, so predict_mean cannot fail
    hessian_fd(|p| gp.predict_mean(p).unwrap_or(f64::NAN), x, h, bounds)
}

fn penalty_from(gp: &FittedGp, x: &[f64], variance: f64, params: &AcquisitionParams, bounds: Option<&Domain>) -> Result<f64> {
    let hessian = mean_hessian(gp, x, params.fd_step, bounds)?;
    Ok(variance * complexity_factor(&hessian, params.eps_eig)?)
}

/// `U(x) = σ²(x) · C(x)`, the curvature-weighted posterior variance.
pub fn uncertainty_measure(
    gp: &FittedGp,
    x: &[f64],
    params: &AcquisitionParams,
    bounds: Option<&Domain>,
) -> Result<f64> {
    let pred = gp.predict(x)?;
    penalty_from(gp, x, pred.variance, params, bounds)
}

/// `μ(x) + κ σ(x) − λ U(x)`. With `λ = 0` the penalty is not computed and the
/// result is exactly [`ucb`].
pub fn adaptive_acquisition(
    gp: &FittedGp,
    x: &[f64],
    params: &AcquisitionParams,
    bounds: Option<&Domain>,
) -> Result<f64> {
    let pred = gp.predict(x)?;
    let base = ucb(pred.mean, pred.sd(), params.kappa);
    if params.lambda_pen == 0.0 {
        return Ok(base);
    }
    let u = penalty_from(gp, x, pred.variance, params, bounds)?;
    Ok(base - params.lambda_pen * u)
}

/// An acquisition function bound to its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acquisition {
    Ucb { kappa: f64 },
    ExpectedImprovement { f_best: f64 },
    Adaptive(AcquisitionParams),
}

impl Acquisition {
    pub fn evaluate(&self, gp: &FittedGp, x: &[f64], bounds: Option<&Domain>) -> Result<f64> {
        match self {
            Acquisition::Ucb { kappa } => {
                let p = gp.predict(x)?;
                Ok(ucb(p.mean, p.sd(), *kappa))
            }
            Acquisition::ExpectedImprovement { f_best } => {
                let p = gp.predict(x)?;
                Ok(expected_improvement(p.mean, p.sd(), *f_best))
            }
            Acquisition::Adaptive(params) => adaptive_acquisition(gp, x, params, bounds),
        }
    }
}
