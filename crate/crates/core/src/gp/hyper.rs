//! Type-II maximum likelihood for kernel hyperparameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use super::model::{fit, Dataset, GpConfig};
use crate::error::{Error, Result};
use crate::optim::{central_gradient, minimize_box, BoxMinimizerConfig};

/// Search intervals (natural units) for each hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub amplitude_sq: (f64, f64),
    pub length_scale: (f64, f64),
    /// When set, the noise variance is learned within this interval.
    pub noise_variance: Option<(f64, f64)>,
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            amplitude_sq: (1e-3, 1e3),
            length_scale: (1e-2, 1e2),
            noise_variance: None,
        }
    }
}

impl HyperBounds {
    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo < hi && hi.is_finite();
        if !ok(self.amplitude_sq) || !ok(self.length_scale) || !self.noise_variance.is_none_or(ok)
        {
            return Err(Error::InvalidInput(format!("invalid hyperparameter bounds {self:?}")));
        }
        Ok(())
    }

    fn log_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.amplitude_sq.0.ln(), self.length_scale.0.ln()];
        let mut hi = vec![self.amplitude_sq.1.ln(), self.length_scale.1.ln()];
        if let Some((a, b)) = self.noise_variance {
            lo.push(a.ln());
            hi.push(b.ln());
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperFit {
    pub kernel: KernelParams,
    pub noise_variance: f64,
    pub log_marginal_likelihood: f64,
    /// False when no restart improved on the best starting point.
    pub improved: bool,
}

struct Objective<'a> {
    dataset: &'a Dataset,
    config: GpConfig,
    template: KernelParams,
    learn_noise: bool,
}

impl Objective<'_> {
    fn decode(&self, theta: &[f64]) -> (KernelParams, GpConfig) {
        let kernel = KernelParams {
            amplitude_sq: theta[0].exp(),
            length_scale: theta[1].exp(),
            ..self.template
        };
        let mut config = self.config;
        if self.learn_noise {
            config.noise_variance = theta[2].exp();
        }
        (kernel, config)
    }

    fn lml(&self, theta: &[f64]) -> f64 {
        let (kernel, config) = self.decode(theta);
        match fit(self.dataset.clone(), kernel, config) {
            Ok(gp) => gp.log_marginal_likelihood(),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Maximizes the log marginal likelihood over log-transformed
/// `(σ_f², l[, σ_n²])`.
///
/// Runs `n_restarts` local searches: the first starts from `start` (clamped
/// into bounds), the rest from log-uniform draws within the bounds.
pub fn optimize_hyperparameters(
    dataset: &Dataset,
    config: &GpConfig,
    start: &KernelParams,
    bounds: &HyperBounds,
    n_restarts: usize,
    rng_seed: u64,
) -> Result<HyperFit> {
    if dataset.len() < 2 {
        return Err(Error::InvalidInput(
            "hyperparameter optimization needs at least 2 observations".into(),
        ));
    }
    if n_restarts == 0 {
        return Err(Error::InvalidInput("n_restarts must be >= 1".into()));
    }
    bounds.validate()?;
    config.validate()?;

    let objective = Objective {
        dataset,
        config: *config,
        template: *start,
        learn_noise: bounds.noise_variance.is_some(),
    };
    let (lo, hi) = bounds.log_box();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut first = vec![start.amplitude_sq.ln(), start.length_scale.ln()];
    if objective.learn_noise {
        first.push(config.noise_variance.max(f64::MIN_POSITIVE).ln());
    }
    let starts: Vec<Vec<f64>> = std::iter::once(first)
        .chain((1..n_restarts).map(|_| {
            lo.iter()
                .zip(&hi)
                .map(|(a, b)| rng.random_range(*a..*b))
                .collect()
        }))
        .map(|mut t: Vec<f64>| {
            for ((v, a), b) in t.iter_mut().zip(&lo).zip(&hi) {
                *v = v.clamp(*a, *b);
            }
            t
        })
        .collect();

    let local = BoxMinimizerConfig {
        max_iters: 60,
        ftol: 1e-9,
        gtol: 1e-5,
        memory: 10,
    };
    let steps = vec![1e-5; lo.len()];

    let mut best_start = (f64::NEG_INFINITY, starts[0].clone());
    let mut best = (f64::NEG_INFINITY, starts[0].clone());
    for s in &starts {
        let start_lml = objective.lml(s);
        if start_lml > best_start.0 {
            best_start = (start_lml, s.clone());
        }
        if !start_lml.is_finite() {
            continue;
        }
        let neg = |t: &[f64]| {
            let v = -objective.lml(t);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let result = minimize_box(
            |t| (neg(t), central_gradient(neg, t, &steps, &lo, &hi)),
            s,
            &lo,
            &hi,
            &local,
        );
        let found = -result.value;
        if found > best.0 {
            best = (found, result.x);
        }
    }

    if !best_start.0.is_finite() {
        return Err(Error::Numerical(
            "log marginal likelihood is not finite at any starting point".into(),
        ));
    }
    let improved = best.0 > best_start.0;
    let (lml, theta) = if improved { best } else { best_start };
    let (kernel, cfg) = objective.decode(&theta);
    Ok(HyperFit {
        kernel: KernelParams {
            amplitude_sq: kernel.amplitude_sq.clamp(bounds.amplitude_sq.0, bounds.amplitude_sq.1),
            length_scale: kernel.length_scale.clamp(bounds.length_scale.0, bounds.length_scale.1),
            ..kernel
        },
        noise_variance: match bounds.noise_variance {
            Some((a, b)) => cfg.noise_variance.clamp(a, b),
            None => cfg.noise_variance,
        },
        log_marginal_likelihood: lml,
        improved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wavy(n: usize) -> Dataset {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x[0]).sin()).collect();
        Dataset::new(1, &xs, &ys).unwrap()
    }

    #[test]
    fn stays_in_bounds_and_improves() {
        let ds = wavy(12);
        let cfg = GpConfig::with_noise(1e-6);
        let start = KernelParams::matern25(50.0, 5.0);
        let bounds = HyperBounds::default();
        let fit_res = optimize_hyperparameters(&ds, &cfg, &start, &bounds, 5, 3).unwrap();
        let k = fit_res.kernel;
        assert!(k.amplitude_sq >= 1e-3 && k.amplitude_sq <= 1e3);
        assert!(k.length_scale >= 1e-2 && k.length_scale <= 1e2);
        let start_lml = fit(ds.clone(), start, cfg).unwrap().log_marginal_likelihood();
        assert!(fit_res.log_marginal_likelihood >= start_lml);
        assert!(fit_res.improved);
        let check = fit(ds, k, cfg).unwrap().log_marginal_likelihood();
        assert!((check - fit_res.log_marginal_likelihood).abs() < 1e-9);
    }

    #[test]
    fn learns_noise_within_bounds() {
        let ds = wavy(10);
        let bounds = HyperBounds {
            noise_variance: Some((1e-8, 1.0)),
            ..HyperBounds::default()
        };
        let r = optimize_hyperparameters(&ds, &GpConfig::with_noise(0.1), &KernelParams::default(), &bounds, 3, 0)
            .unwrap();
        assert!(r.noise_variance >= 1e-8 && r.noise_variance <= 1.0, "{r:?}");
    }

    #[test]
    fn needs_two_points() {
        let ds = Dataset::new(1, &[vec![0.0]], &[1.0]).unwrap();
        assert!(optimize_hyperparameters(
            &ds,
            &GpConfig::default(),
            &KernelParams::default(),
            &HyperBounds::default(),
            5,
            0
        )
        .is_err());
    }
}
