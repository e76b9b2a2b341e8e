//! Acquisition maximization: a Sobol global stage followed by bounded
//! quasi-Newton refinement of the best candidates.

mod sobol;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sobol::{sobol_samples, Sobol, MAX_DIM as SOBOL_MAX_DIM};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::optim::{central_gradient, minimize_box, BoxMinimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_global: usize,
    pub n_refine: usize,
    pub max_local_iters: usize,
    pub local_tol: f64,
    pub sobol_skip: usize,
    /// Central-difference step for refinement gradients, relative to the
    /// width of each coordinate.
    pub gradient_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_global: 1000,
            n_refine: 5,
            max_local_iters: 100,
            local_tol: 1e-5,
            sobol_skip: 1,
            gradient_step: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_global == 0 || self.n_refine == 0 || self.max_local_iters == 0 {
            return Err(Error::InvalidInput("search counts must be >= 1".into()));
        }
        if self.n_refine > self.n_global {
            return Err(Error::InvalidInput("n_refine must not exceed n_global".into()));
        }
        if !(self.local_tol > 0.0 && self.gradient_step > 0.0) {
            return Err(Error::InvalidInput("search tolerances must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: Vec<f64>,
    pub value: f64,
}

fn finite_or_neg_inf(v: Result<f64>) -> f64 {
    match v {
        Ok(x) if x.is_finite() => x,
        _ => f64::NEG_INFINITY,
    }
}

/// Maximizes `acq` locally from `start` inside `domain`.
///
/// The returned value is never below the value at `start`.
pub fn refine_local<F>(acq: &F, start: &[f64], domain: &Domain, cfg: &SearchConfig) -> Proposal
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let steps: Vec<f64> = (0..domain.dim())
        .map(|i| cfg.gradient_step * domain.width(i))
        .collect();
    let neg = |x: &[f64]| -> f64 {
        let v = finite_or_neg_inf(acq(x));
        -v
    };
    let local = BoxMinimizerConfig {
        max_iters: cfg.max_local_iters,
        ftol: cfg.local_tol,
        gtol: cfg.local_tol,
        memory: 10,
    };
    let result = minimize_box(
        |x| (neg(x), central_gradient(neg, x, &steps, domain.lower(), domain.upper())),
        start,
        domain.lower(),
        domain.upper(),
        &local,
    );
    let mut point = result.x;
    domain.clamp(&mut point);
    Proposal {
        point,
        value: -result.value,
    }
}

/// Returns the maximizer of `acq` found by the two-stage search.
///
/// Ties between equal acquisition values go to the earliest Sobol
/// candidate; a refined point only replaces the incumbent when strictly
/// better.
pub fn propose_next<F>(acq: F, domain: &Domain, cfg: &SearchConfig) -> Result<Proposal>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let candidates = sobol_samples(domain, cfg.n_global, cfg.sobol_skip)?;
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|x| finite_or_neg_inf(acq(x)))
        .collect();

    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| values[i].is_finite())
        .collect();
    if order.is_empty() {
        return Err(Error::SearchFailure(
            "acquisition is non-finite at every global candidate".into(),
        ));
    }
    // stable: equal values keep index order
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order.truncate(cfg.n_refine);

    let refined: Vec<Proposal> = order
        .par_iter()
        .map(|&i| refine_local(&acq, &candidates[i], domain, cfg))
        .collect();

    let mut best = Proposal {
        point: candidates[order[0]].clone(),
        value: values[order[0]],
    };
    for p in refined {
        if p.value > best.value {
            best = p;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let c = [0.31, -0.42];
        let acq = |x: &[f64]| Ok(-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)));
        let d = Domain::cube(2, -1.0, 1.0).unwrap();
        let p = propose_next(acq, &d, &SearchConfig::default()).unwrap();
        let dist = ((p.point[0] - c[0]).powi(2) + (p.point[1] - c[1]).powi(2)).sqrt();
        assert!(dist < 1e-3, "{p:?}");
    }

    #[test]
    fn constant_acquisition_returns_first_candidate() {
        let d = Domain::unit(3);
        let p = propose_next(|_: &[f64]| Ok(2.0), &d, &SearchConfig::default()).unwrap();
        assert_eq!(p.point, vec![0.5, 0.5, 0.5]);
        assert_eq!(p.value, 2.0);
    }

    #[test]
    fn never_below_best_candidate() {
        let acq = |x: &[f64]| Ok((9.0 * x[0]).sin() * (7.0 * x[1]).cos());
        let d = Domain::unit(2);
        let cfg = SearchConfig { n_global: 64, ..Default::default() };
        let p = propose_next(acq, &d, &cfg).unwrap();
        let best_raw = sobol_samples(&d, 64, 1)
            .unwrap()
            .iter()
            .map(|x| acq(x).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(p.value >= best_raw);
        assert!(d.contains(&p.point));
    }

    #[test]
    fn boundary_maximum_is_exactly_feasible() {
        let acq = |x: &[f64]| Ok(x[0] + 2.0 * x[1]);
        let d = Domain::unit(2);
        let p = propose_next(acq, &d, &SearchConfig::default()).unwrap();
        assert_eq!(p.point, vec![1.0, 1.0]);
    }

    #[test]
    fn all_non_finite_is_a_failure() {
        let d = Domain::unit(1);
        let r = propose_next(|_: &[f64]| Ok(f64::NAN), &d, &SearchConfig::default());
        assert!(matches!(r, Err(Error::SearchFailure(_))));
    }

    #[test]
    fn invalid_config() {
        let cfg = SearchConfig { n_global: 3, n_refine: 5, ..Default::default() };
        assert!(propose_next(|_: &[f64]| Ok(0.0), &Domain::unit(1), &cfg).is_err());
    }
}
