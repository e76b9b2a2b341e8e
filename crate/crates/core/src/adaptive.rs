//! Online adaptation of the exploration weight κ and the penalty weight λ.
//!
//! Per iteration, in this order:
//!
//! 1. `Δ_t = |y_t − μ_{t−1}(x_t)|`, then `Δ̄_t = (1 − η) Δ̄_{t−1} + η Δ_t`
//! 2. `I_t = ∫ σ_t²(x) dx`, then `Ī_t = (1 − η) Ī_{t−1} + η I_t`
//! 3. `κ_{t+1} = κ_t · exp(β (Δ_t − Δ̄_t) / Δ̄_t)`
//! 4. `λ_{t+1} = λ_t · (1 + γ (I_t − Ī_t) / Ī_t)`
//!
//! Each moving average is seeded with its first sample, so the first update
//! of each coefficient is the identity. Both coefficients are clamped to
//! their configured ranges after every update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::gp::FittedGp;

/// Denominators below this leave the coefficient unchanged.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Learning rates, smoothing weight and clamping bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub lambda_max: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            gamma: 0.05,
            eta: 0.1,
            kappa_min: 0.01,
            kappa_max: 10.0,
            lambda_max: 10.0,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta >= 0.0
            && self.gamma >= 0.0
            && self.eta > 0.0
            && self.eta < 1.0
            && self.kappa_min > 0.0
            && self.kappa_min <= self.kappa_max
            && self.lambda_max >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid adaptive configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState {
    kappa: f64,
    lambda_pen: f64,
    delta_bar: Option<f64>,
    i_bar: Option<f64>,
    t: usize,
    config: AdaptiveConfig,
}

fn ema(previous: Option<f64>, sample: f64, eta: f64) -> f64 {
    match previous {
        None => sample,
        Some(avg) => (1.0 - eta) * avg + eta * sample,
    }
}

impl AdaptiveState {
    /// Initial coefficients are clamped into the configured ranges.
    pub fn new(kappa: f64, lambda_pen: f64, config: AdaptiveConfig) -> Result<Self> {
        config.validate()?;
        if !(kappa.is_finite() && lambda_pen.is_finite() && lambda_pen >= 0.0 && kappa > 0.0) {
            return Err(Error::InvalidInput(format!(
                "initial coefficients must satisfy kappa > 0, lambda >= 0 (got {kappa}, {lambda_pen})"
            )));
        }
        Ok(Self {
            kappa: kappa.clamp(config.kappa_min, config.kappa_max),
            lambda_pen: lambda_pen.min(config.lambda_max),
            delta_bar: None,
            i_bar: None,
            t: 0,
            config,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda_pen(&self) -> f64 {
        self.lambda_pen
    }

    /// Moving average of prediction errors (0 before the first sample).
    pub fn delta_bar(&self) -> f64 {
        self.delta_bar.unwrap_or(0.0)
    }

    /// Moving average of integrated variance (0 before the first sample).
    pub fn i_bar(&self) -> f64 {
        self.i_bar.unwrap_or(0.0)
    }

    /// Number of completed [`Self::step`] calls.
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn config(&self) -> &AdaptiveConfig {
        &self.config
    }

    /// Computes `Δ_t` and folds it into `Δ̄`. Returns `Δ_t`.
    pub fn record_prediction_error(&mut self, observed_y: f64, predicted_mean: f64) -> f64 {
        let delta = (observed_y - predicted_mean).abs();
        self.delta_bar = Some(ema(self.delta_bar, delta, self.config.eta));
        delta
    }

    /// Folds `I_t` into `Ī`.
    pub fn record_integrated_variance(&mut self, i_t: f64) {
        self.i_bar = Some(ema(self.i_bar, i_t, self.config.eta));
    }

    /// Multiplicative κ update against the already-updated `Δ̄_t`.
    pub fn update_kappa(&mut self, delta_t: f64) -> f64 {
        let avg = self.delta_bar();
        let factor = if avg < DENOMINATOR_GUARD {
            1.0
        } else {
            (self.config.beta * (delta_t - avg) / avg).exp()
        };
        self.kappa = (self.kappa * factor).clamp(self.config.kappa_min, self.config.kappa_max);
        self.kappa
    }

    /// Multiplicative λ update against the already-updated `Ī_t`.
    pub fn update_lambda(&mut self, i_t: f64) -> f64 {
        let avg = self.i_bar();
        let factor = if avg < DENOMINATOR_GUARD {
            1.0
        } else {
            1.0 + self.config.gamma * (i_t - avg) / avg
        };
        self.lambda_pen = (self.lambda_pen * factor).clamp(0.0, self.config.lambda_max);
        self.lambda_pen
    }

    /// One full iteration in the documented order. Returns `Δ_t`.
    pub fn step(&mut self, observed_y: f64, predicted_mean: f64, i_t: f64) -> f64 {
        let delta = self.record_prediction_error(observed_y, predicted_mean);
        self.record_integrated_variance(i_t);
        self.update_kappa(delta);
        self.update_lambda(i_t);
        self.t += 1;
        delta
    }
}

/// Monte-Carlo estimate `(V / N) Σ σ²(x_i)` of the integrated posterior
/// variance over `domain`, with `x_i` uniform in the box.
///
/// `domain` is expressed in the GP's input coordinates.
pub fn integrated_variance_mc(gp: &FittedGp, domain: &Domain, n_samples: usize, rng_seed: u64) -> Result<f64> {
    check_dim(gp.dim(), domain.dim())?;
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut x = vec![0.0; domain.dim()];
    let mut sum = 0.0;
    for _ in 0..n_samples {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = domain.lower()[i] + rng.random::<f64>() * domain.width(i);
        }
        sum += gp.predict(&x)?.variance;
    }
    Ok(domain.volume() * (sum / n_samples as f64))
}
