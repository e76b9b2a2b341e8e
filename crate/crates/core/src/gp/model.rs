//! Exact GP posterior via a cached Cholesky factor.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use crate::error::{check_dim, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Round-off tolerance below zero for the posterior variance.
pub const NEGATIVE_VARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Observation-noise variance σ_n².
    pub noise_variance: f64,
    pub jitter_initial: f64,
    pub jitter_max: f64,
    /// Constant prior mean.
    pub mean: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            noise_variance: 0.0,
            jitter_initial: 1e-10,
            jitter_max: 1e-4,
            mean: 0.0,
        }
    }
}

impl GpConfig {
    pub fn with_noise(noise_variance: f64) -> Self {
        Self {
            noise_variance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be finite and >= 0, got {}",
                self.noise_variance
            )));
        }
        if !(self.jitter_initial > 0.0 && self.jitter_initial <= self.jitter_max) {
            return Err(Error::InvalidInput(format!(
                "jitter bounds must satisfy 0 < {} <= {}",
                self.jitter_initial, self.jitter_max
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidInput("prior mean must be finite".into()));
        }
        Ok(())
    }
}

/// Training inputs (row-major, `n × d`) and observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    points: Vec<f64>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dataset dimension must be >= 1".into()));
        }
        Ok(Self {
            dim,
            points: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn new(dim: usize, rows: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        let mut ds = Self::empty(dim)?;
        check_dim(rows.len(), values.len())?;
        for (x, y) in rows.iter().zip(values) {
            ds.push(x, *y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset entries must be finite".into()));
        }
        self.points.extend_from_slice(x);
        self.values.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copy with the observations replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        check_dim(self.len(), values.len())?;
        Ok(Self {
            dim: self.dim,
            points: self.points.clone(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A GP conditioned on a dataset. Immutable after [`fit`].
#[derive(Debug, Clone)]
pub struct FittedGp {
    dataset: Dataset,
    kernel: KernelParams,
    config: GpConfig,
    chol: DMatrix<f64>,
    /// Row-major packed lower triangle of `chol`, used for forward solves.
    chol_rows: Vec<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Builds the noisy training covariance `K + σ_n² I`.
pub fn training_covariance(dataset: &Dataset, kernel: &KernelParams, noise: f64) -> DMatrix<f64> {
    let n = dataset.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval_unchecked(dataset.point(i), dataset.point(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += noise;
    }
    k
}

/// Conditions the GP prior on `dataset`.
///
/// Factorization is first attempted without jitter; on failure the diagonal
/// jitter starts at `jitter_initial` and grows by 10x up to `jitter_max`.
pub fn fit(dataset: Dataset, kernel: KernelParams, config: GpConfig) -> Result<FittedGp> {
    kernel.validate()?;
    config.validate()?;
    let n = dataset.len();
    let base = training_covariance(&dataset, &kernel, config.noise_variance);

    let mut jitter = 0.0;
    let chol = loop {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(k) {
            let l = c.unpack();
            if (0..n).all(|i| l[(i, i)] > 0.0 && l[(i, i)].is_finite()) {
                break l;
            }
        }
        jitter = if jitter == 0.0 {
            config.jitter_initial
        } else {
            jitter * 10.0
        };
        if jitter > config.jitter_max * (1.0 + 1e-9) {
            return Err(Error::NonPositiveDefinite {
                jitter: config.jitter_max,
            });
        }
    };

    let centered = DVector::from_iterator(n, dataset.values().iter().map(|y| y - config.mean));
    let alpha = if n == 0 {
        DVector::zeros(0)
    } else {
        let z = chol
            .solve_lower_triangular(&centered)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        chol.transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?
    };

    let mut chol_rows = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            chol_rows.push(chol[(i, j)]);
        }
    }

    Ok(FittedGp {
        dataset,
        kernel,
        config,
        chol,
        chol_rows,
        alpha,
        jitter,
    })
}

impl FittedGp {
    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn config(&self) -> &GpConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + (σ_n² + jitter) I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Diagonal jitter that was needed to factorize (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross_covariance(&self, x: &[f64]) -> Vec<f64> {
        self.dataset
            .points()
            .map(|p| self.kernel.eval_unchecked(x, p))
            .collect()
    }

    fn mean_from(&self, k: &[f64]) -> f64 {
        self.config.mean + k.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Posterior mean only; skips the triangular solve.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.mean_from(&self.cross_covariance(x)))
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim(), x.len())?;
        let mut v = self.cross_covariance(x);
        let mean = self.mean_from(&v);

        // forward substitution L v = k, in place
        let n = v.len();
        let mut row = 0;
        for i in 0..n {
            let li = &self.chol_rows[row..row + i + 1];
            let s: f64 = li[..i].iter().zip(&v[..i]).map(|(a, b)| a * b).sum();
            v[i] = (v[i] - s) / li[i];
            row += i + 1;
        }
        let reduction: f64 = v.iter().map(|a| a * a).sum();
        let variance = self.kernel.prior_variance() - reduction;
        if variance < -NEGATIVE_VARIANCE_TOL || !variance.is_finite() {
            return Err(Error::Numerical(format!(
                "posterior variance {variance:e} is negative beyond round-off"
            )));
        }
        Ok(Prediction {
            mean,
            variance: variance.max(0.0),
        })
    }

    /// Parallel batch prediction; identical to calling [`Self::predict`] per point.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Log marginal likelihood of the training observations.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.dataset.len();
        if n == 0 {
            return 0.0;
        }
        let fit_term: f64 = self
            .dataset
            .values()
            .iter()
            .zip(self.alpha.iter())
            .map(|(y, a)| (y - self.config.mean) * a)
            .sum();
        let log_det_half: f64 = (0..n).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * fit_term - log_det_half - 0.5 * n as f64 * LN_2PI
    }
}
