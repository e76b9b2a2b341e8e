//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use adaptive_gp::gp::{kernel_eval, Dataset, FittedGp, KernelParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

/// `K_ν(z) = ∫₀^∞ exp(−z cosh t) cosh(ν t) dt` by the trapezoid rule, which
/// converges geometrically for this analytic, doubly-exponentially decaying
/// integrand. The integrand is scaled by `exp(z)` internally.
pub fn bessel_k(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0);
    let g = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    // integrand relative to its value at 0 falls below e^-60 beyond `upper`
    let mut upper = 1.0f64;
    while z * (upper.cosh() - 1.0) - nu * upper < 60.0 {
        upper += 0.5;
    }
    let h = 0.01;
    let n = (upper / h).ceil() as usize;
    let mut sum = 0.5 * g(0.0);
    for i in 1..=n {
        sum += g(i as f64 * h);
    }
    sum * h * (-z).exp()
}

/// Matérn covariance in its general form,
/// `σ² 2^{1−ν}/Γ(ν) (√(2ν) r/l)^ν K_ν(√(2ν) r/l)`.
pub fn matern_general(amplitude_sq: f64, length_scale: f64, nu: f64, r: f64) -> f64 {
    if r == 0.0 {
        return amplitude_sq;
    }
    let z = (2.0 * nu).sqrt() * r / length_scale;
    amplitude_sq * 2f64.powf(1.0 - nu) / gamma(nu) * z.powf(nu) * bessel_k(nu, z)
}

pub struct DensePosterior {
    pub mean: f64,
    pub variance: f64,
}

fn gram(points: &[Vec<f64>], kernel: &KernelParams, noise: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel_eval(&points[i], &points[j], kernel).unwrap() + if i == j { noise } else { 0.0 }
    })
}

/// Posterior moments through an explicit matrix inverse.
pub fn dense_posterior(points: &[Vec<f64>], ys: &[f64], kernel: &KernelParams, noise: f64, x: &[f64]) -> DensePosterior {
    let k_inv = gram(points, kernel, noise).try_inverse().expect("invertible");
    let k_star = DVector::from_iterator(points.len(), points.iter().map(|p| kernel_eval(p, x, kernel).unwrap()));
    let y = DVector::from_column_slice(ys);
    let w = &k_inv * &k_star;
    DensePosterior {
        mean: w.dot(&y),
        variance: kernel_eval(x, x, kernel).unwrap() - k_star.dot(&w),
    }
}

/// `−½ yᵀK⁻¹y − ½ log det K − (n/2) log 2π` via inverse and LU determinant.
pub fn dense_lml(points: &[Vec<f64>], ys: &[f64], kernel: &KernelParams, noise: f64) -> f64 {
    let k = gram(points, kernel, noise);
    let det = k.clone().lu().determinant();
    let k_inv = k.try_inverse().expect("invertible");
    let y = DVector::from_column_slice(ys);
    let n = ys.len() as f64;
    -0.5 * y.dot(&(&k_inv * &y)) - 0.5 * det.ln() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Stratified Monte-Carlo estimate of `E[max(f − f_best, 0)]`,
/// `f ~ N(mean, sd²)`, with one uniform draw per equal-probability stratum.
pub fn mc_expected_improvement(mean: f64, sd: f64, f_best: f64, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut total = 0.0;
    for i in 0..n {
        let u = (i as f64 + rng.random::<f64>()) / n as f64;
        let z = std.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16));
        total += (mean + sd * z - f_best).max(0.0);
    }
    total / n as f64
}

/// `∫ σ²(x) dx` over `[lo, hi]` for a 1-D model, trapezoid rule on `n` intervals.
pub fn trapezoid_integrated_variance(gp: &FittedGp, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let v = |i: usize| gp.predict(&[lo + i as f64 * h]).unwrap().variance;
    let mut sum = 0.5 * (v(0) + v(n));
    for i in 1..n {
        sum += v(i);
    }
    sum * h
}

pub fn dataset(points: &[Vec<f64>], ys: &[f64]) -> Dataset {
    Dataset::new(points[0].len(), points, ys).unwrap()
}
