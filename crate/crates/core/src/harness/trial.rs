use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, StrategyKind};
use crate::acquisition::{Acquisition, AcquisitionParams};
use crate::adaptive::{integrated_variance_mc, AdaptiveState};
use crate::benchmarks::{noisy_eval, TestFunction};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{fit, optimize_hyperparameters, Dataset, FittedGp, GpConfig, HyperBounds, KernelParams};
use crate::search::{propose_next, Sobol};

/// Local searches per hyperparameter refit (current values plus random draws).
pub const HYPER_RESTARTS: usize = 5;
/// Lower bound on the GP noise variance in standardized units.
pub const NOISE_FLOOR: f64 = 1e-8;

// Independent generator streams derived from the trial seed.
const STREAM_INIT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_RANDOM: u64 = 3;
const STREAM_HYPER: u64 = 4;
const STREAM_MC: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One evaluation of the objective. `t` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub f_true: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub delta: f64,
    pub delta_bar: f64,
    pub i_mc: f64,
    pub i_bar: f64,
    pub best_true: f64,
    pub iter_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub seed: u64,
    pub records: Vec<TrialRecord>,
    /// Kernel in use at the last iteration (standardized output units).
    pub final_kernel: Option<KernelParams>,
}

impl TrialTrace {
    pub fn strip_timing(&mut self) {
        for r in &mut self.records {
            r.iter_seconds = 0.0;
        }
    }
}

/// The points of the initial design in unit coordinates: the first `n`
/// Sobol points under a seed-dependent Cranley–Patterson shift.
pub fn initial_design(dim: usize, n: usize, trial_seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(trial_seed, STREAM_INIT);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let sobol = Sobol::new(dim)?;
    Ok(sobol
        .take(n)
        .map(|p| p.iter().zip(&shift).map(|(a, s)| (a + s).fract()).collect())
        .collect())
}

/// Uniform draws used by random search after the initial design, in unit
/// coordinates.
pub fn random_search_points(dim: usize, n: usize, trial_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(trial_seed, STREAM_RANDOM);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Affine map from observations to zero-mean unit-variance model targets,
/// after flipping the sign so that larger is better.
#[derive(Debug, Clone, Copy)]
struct Standardizer {
    sign: f64,
    mean: f64,
    scale: f64,
}

impl Standardizer {
    fn new(values: &[f64], sign: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().map(|v| sign * v).sum::<f64>() / n;
        let var = values.iter().map(|v| (sign * v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        Self { sign, mean, scale }
    }

    fn forward(&self, y: f64) -> f64 {
        (self.sign * y - self.mean) / self.scale
    }

    fn inverse(&self, z: f64) -> f64 {
        self.sign * (z * self.scale + self.mean)
    }
}

struct Model {
    gp: FittedGp,
    standardizer: Standardizer,
}

fn fit_model(points: &[Vec<f64>], ys: &[f64], sign: f64, noise_std: f64, kernel: KernelParams) -> Result<Model> {
    let standardizer = Standardizer::new(ys, sign);
    let targets: Vec<f64> = ys.iter().map(|&y| standardizer.forward(y)).collect();
    let dataset = Dataset::new(points[0].len(), points, &targets)?;
    let noise = (noise_std / standardizer.scale).powi(2).max(NOISE_FLOOR);
    let gp = fit(dataset, kernel, GpConfig::with_noise(noise))?;
    Ok(Model { gp, standardizer })
}

/// Runs one optimization trial.
///
/// The model works on the unit box with sign-flipped, standardized outputs;
/// every recorded quantity (`y`, `f_true`, `Δ`, `I`) is in the problem's
/// original units.
pub fn run_trial(cfg: &ExperimentConfig, function: &TestFunction, trial_seed: u64) -> Result<TrialTrace> {
    cfg.validate()?;
    if function.dim != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: function.dim,
        });
    }
    let d = cfg.dim;
    let unit = Domain::unit(d);
    let sign = function.sense.to_max_sign();
    let search = cfg.search();
    let volume = function.bounds.volume();

    let mut noise_rng = stream(trial_seed, STREAM_NOISE);
    let mut hyper_rng = stream(trial_seed, STREAM_HYPER);
    let mut mc_rng = stream(trial_seed, STREAM_MC);
    let init = initial_design(d, cfg.n_init, trial_seed)?;
    let random_points = match cfg.strategy {
        StrategyKind::RandomSearch => random_search_points(d, cfg.budget - cfg.n_init, trial_seed),
        _ => Vec::new(),
    };

    let mut adaptive = match cfg.strategy {
        StrategyKind::AdaptiveGp => Some(AdaptiveState::new(cfg.kappa_init, cfg.lambda_init, cfg.adaptive())?),
        _ => None,
    };
    let (const_kappa, const_lambda) = match cfg.strategy {
        StrategyKind::FixedUcb => (cfg.kappa_init, 0.0),
        _ => (cfg.kappa_init, cfg.lambda_init),
    };

    let mut kernel = KernelParams::default();
    let mut fitted_once = false;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(cfg.budget);
    let mut ys: Vec<f64> = Vec::with_capacity(cfg.budget);
    let mut records: Vec<TrialRecord> = Vec::with_capacity(cfg.budget);
    let mut best_true: Option<f64> = None;

    let evaluate = |u: &[f64], rng: &mut ChaCha8Rng| -> Result<(Vec<f64>, f64, f64)> {
        let x = function.bounds.from_unit(u);
        let f_true = function.evaluate(&x)?;
        let y = noisy_eval(|_| f_true, &x, cfg.noise_std, rng);
        Ok((x, y, f_true))
    };

    for t in 1..=cfg.budget {
        let started = Instant::now();
        let n = points.len();
        let mut kappa_t = const_kappa;
        let mut lambda_t = const_lambda;
        let (mut delta, mut delta_bar, mut i_mc, mut i_bar) = (0.0, 0.0, 0.0, 0.0);

        let (u, x, y, f_true) = if n < cfg.n_init {
            let u = init[n].clone();
            let (x, y, f) = evaluate(&u, &mut noise_rng)?;
            (u, x, y, f)
        } else if cfg.strategy == StrategyKind::RandomSearch {
            let u = random_points[n - cfg.n_init].clone();
            let (x, y, f) = evaluate(&u, &mut noise_rng)?;
            (u, x, y, f)
        } else {
            if !fitted_once || n.is_multiple_of(cfg.refit_every) {
                let standardizer = Standardizer::new(&ys, sign);
                let targets: Vec<f64> = ys.iter().map(|&v| standardizer.forward(v)).collect();
                let dataset = Dataset::new(d, &points, &targets)?;
                let noise = (cfg.noise_std / standardizer.scale).powi(2).max(NOISE_FLOOR);
                let seed = hyper_rng.next_u64();
                // a failed search keeps the previous hyperparameters
                if let Ok(h) = optimize_hyperparameters(
                    &dataset,
                    &GpConfig::with_noise(noise),
                    &kernel,
                    &HyperBounds::default(),
                    HYPER_RESTARTS,
                    seed,
                ) {
                    kernel = h.kernel;
                }
                fitted_once = true;
            }
            let model = fit_model(&points, &ys, sign, cfg.noise_std, kernel)?;
            if let Some(state) = &adaptive {
                kappa_t = state.kappa();
                lambda_t = state.lambda_pen();
            }
            let acquisition = match cfg.strategy {
                StrategyKind::AdaptiveGp => Acquisition::Adaptive(AcquisitionParams::new(kappa_t, lambda_t)),
                StrategyKind::FixedUcb => Acquisition::Ucb { kappa: cfg.kappa_init },
                StrategyKind::ExpectedImprovement => {
                    let f_best = ys
                        .iter()
                        .map(|&v| model.standardizer.forward(v))
                        .fold(f64::NEG_INFINITY, f64::max);
                    Acquisition::ExpectedImprovement { f_best }
                }
                StrategyKind::RandomSearch => unreachable!(),
            };
            let proposal = propose_next(|p: &[f64]| acquisition.evaluate(&model.gp, p, Some(&unit)), &unit, &search)?;
            let u = proposal.point;
            let (x, y, f) = evaluate(&u, &mut noise_rng)?;

            if let Some(state) = adaptive.as_mut() {
                let predicted = model.standardizer.inverse(model.gp.predict_mean(&u)?);
                points.push(u.clone());
                ys.push(y);
                let updated = fit_model(&points, &ys, sign, cfg.noise_std, kernel)?;
                let scale_sq = updated.standardizer.scale.powi(2);
                let i_t = volume * scale_sq * integrated_variance_mc(&updated.gp, &unit, cfg.mc_samples, mc_rng.next_u64())?;
                delta = state.step(y, predicted, i_t);
                delta_bar = state.delta_bar();
                i_mc = i_t;
                i_bar = state.i_bar();
                points.pop();
                ys.pop();
            }
            (u, x, y, f)
        };

        points.push(u);
        ys.push(y);
        let best = match best_true {
            Some(b) if !function.sense.better(f_true, b) => b,
            _ => f_true,
        };
        best_true = Some(best);
        records.push(TrialRecord {
            t,
            x,
            y,
            f_true,
            kappa: kappa_t,
            lambda: lambda_t,
            delta,
            delta_bar,
            i_mc,
            i_bar,
            best_true: best,
            iter_seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(TrialTrace {
        seed: trial_seed,
        records,
        final_kernel: if cfg.strategy.uses_model() { Some(kernel) } else { None },
    })
}
