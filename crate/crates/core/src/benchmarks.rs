//! Benchmark objectives with known (or estimated) optima.

use std::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::optim::{central_gradient, minimize_box, BoxMinimizerConfig};
use crate::search::sobol_samples;

/// Whether smaller or larger objective values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Non-negative distance of `value` from the optimum `best`.
    pub fn gap(&self, value: f64, best: f64) -> f64 {
        match self {
            Sense::Minimize => value - best,
            Sense::Maximize => best - value,
        }
    }

    pub fn better(&self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Sign that turns this sense into maximization.
    pub fn to_max_sign(&self) -> f64 {
        match self {
            Sense::Minimize => -1.0,
            Sense::Maximize => 1.0,
        }
    }
}

pub fn rosenbrock(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidInput("rosenbrock needs d >= 2".into()));
    }
    Ok(x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum())
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + E
}

/// Levy with `w_i = 1 + (x_i − 1)/4`. For `d = 1` only the first and last
/// terms remain.
pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let first = (PI * w[0]).sin().powi(2);
    let middle: f64 = w[..d - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let wd = w[d - 1];
    let last = (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2));
    first + middle + last
}

/// A sum of unnormalized Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureFields", into = "MixtureFields")]
pub struct GaussianMixtureSpec {
    pub n_components: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Row-major `d × d` covariance matrices.
    pub covariances: Vec<Vec<f64>>,
    pub seed: u64,
    factors: Vec<DMatrix<f64>>,
}

/// Serialized form; the Cholesky factors are rebuilt on load.
#[derive(Serialize, Deserialize)]
struct MixtureFields {
    n_components: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<f64>>,
    seed: u64,
}

impl TryFrom<MixtureFields> for GaussianMixtureSpec {
    type Error = Error;

    fn try_from(raw: MixtureFields) -> Result<Self> {
        let spec = Self::new(raw.weights, raw.means, raw.covariances, raw.seed)?;
        check_dim(spec.n_components, raw.n_components)?;
        Ok(spec)
    }
}

impl From<GaussianMixtureSpec> for MixtureFields {
    fn from(spec: GaussianMixtureSpec) -> Self {
        Self {
            n_components: spec.n_components,
            weights: spec.weights,
            means: spec.means,
            covariances: spec.covariances,
            seed: spec.seed,
        }
    }
}

impl GaussianMixtureSpec {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        check_dim(m, means.len())?;
        check_dim(m, covariances.len())?;
        let d = means[0].len();
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("mixture weights must be > 0".into()));
        }
        let mut factors = Vec::with_capacity(m);
        for (mu, cov) in means.iter().zip(&covariances) {
            check_dim(d, mu.len())?;
            check_dim(d * d, cov.len())?;
            let mat = DMatrix::from_row_slice(d, d, cov);
            let chol = Cholesky::new(mat)
                .ok_or_else(|| Error::Numerical("mixture covariance is not positive definite".into()))?;
            factors.push(chol.unpack());
        }
        Ok(Self {
            n_components: m,
            weights,
            means,
            covariances,
            seed,
            factors,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn covariance(&self, j: usize) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.covariances[j])
    }

    /// Lower Cholesky factor of component `j`.
    fn factor(&self, j: usize) -> &DMatrix<f64> {
        &self.factors[j]
    }
}

/// Random mixture: means uniform in `[−5, 5]^d`, weights from a flat
/// Dirichlet, covariances `Q Λ Qᵀ` with Haar-random `Q` and eigenvalues
/// log-uniform in `[0.1, 2.0]`.
pub fn make_gaussian_mixture(seed: u64, d: usize, m: usize) -> Result<GaussianMixtureSpec> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidInput("mixture needs d >= 1 and m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|g| g / total).collect();
    let means: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let (lo, hi) = (0.1f64.ln(), 2.0f64.ln());
    let covariances = (0..m)
        .map(|_| {
            let g: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            let qr = g.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..d {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            let eig = DVector::from_fn(d, |_, _| rng.random_range(lo..hi).exp());
            let cov: DMatrix<f64> = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            let cov = (&cov + cov.transpose()) * 0.5;
            let mut rows = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    rows.push(cov[(i, j)]);
                }
            }
            rows
        })
        .collect();
    GaussianMixtureSpec::new(weights, means, covariances, seed)
}

/// `Σ_j a_j exp(−½ (x − μ_j)ᵀ Σ_j⁻¹ (x − μ_j))`.
pub fn gaussian_mixture_eval(spec: &GaussianMixtureSpec, x: &[f64]) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    let mut total = 0.0;
    for j in 0..spec.n_components {
        let diff = DVector::from_iterator(x.len(), x.iter().zip(&spec.means[j]).map(|(a, b)| a - b));
        let chol = spec.factor(j);
        let z = chol
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Numerical("singular mixture covariance".into()))?;
        total += spec.weights[j] * (-0.5 * z.norm_squared()).exp();
    }
    Ok(total)
}

/// `f(x) + ε` with `ε ~ N(0, σ_n²)`.
///
/// One normal variate is consumed per call even when `sigma_n = 0`, so the
/// generator stream does not depend on the noise level.
pub fn noisy_eval<F, R>(f: F, x: &[f64], sigma_n: f64, rng: &mut R) -> f64
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let z: f64 = StandardNormal.sample(rng);
    let clean = f(x);
    if sigma_n > 0.0 {
        clean + sigma_n * z
    } else {
        clean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Rosenbrock,
    Ackley,
    Levy,
    GaussianMixture(GaussianMixtureSpec),
}

/// A benchmark problem: objective, box, and optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub dim: usize,
    pub bounds: Domain,
    pub optimum_point: Vec<f64>,
    pub optimum_value: f64,
    /// True when the optimum was found numerically rather than known.
    pub optimum_estimated: bool,
    pub sense: Sense,
    pub objective: Objective,
}

/// Number of mixture components used by [`TestFunction::by_name`].
pub const DEFAULT_MIXTURE_COMPONENTS: usize = 5;

impl TestFunction {
    pub fn rosenbrock(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput("rosenbrock needs d >= 2".into()));
        }
        Ok(Self {
            name: "rosenbrock".into(),
            dim,
            bounds: Domain::cube(dim, -2.048, 2.048)?,
            optimum_point: vec![1.0; dim],
            optimum_value: 0.0,
            optimum_estimated: false,
            sense: Sense::Minimize,
            objective: Objective::Rosenbrock,
        })
    }

    pub fn ackley(dim: usize) -> Result<Self> {
        Ok(Self {
            name: "ackley".into(),
            dim,
            bounds: Domain::cube(dim, -5.0, 5.0)?,
            optimum_point: vec![0.0; dim],
            optimum_value: 0.0,
            optimum_estimated: false,
            sense: Sense::Minimize,
            objective: Objective::Ackley,
        })
    }

    pub fn levy(dim: usize) -> Result<Self> {
        Ok(Self {
            name: "levy".into(),
            dim,
            bounds: Domain::cube(dim, -10.0, 10.0)?,
            optimum_point: vec![1.0; dim],
            optimum_value: 0.0,
            optimum_estimated: false,
            sense: Sense::Minimize,
            objective: Objective::Levy,
        })
    }

    /// Mixture landscape on `[−5, 5]^d`; its maximum is estimated by
    /// multistart local search from every component mean and a Sobol design.
    pub fn gaussian_mixture(spec: GaussianMixtureSpec) -> Result<Self> {
        let dim = spec.dim();
        let bounds = Domain::cube(dim, -5.0, 5.0)?;
        let (optimum_point, optimum_value) = estimate_mixture_maximum(&spec, &bounds)?;
        Ok(Self {
            name: "gaussian_mixture".into(),
            dim,
            bounds,
            optimum_point,
            optimum_value,
            optimum_estimated: true,
            sense: Sense::Maximize,
            objective: Objective::GaussianMixture(spec),
        })
    }

    /// Looks up a benchmark by name. `seed` only affects the mixture.
    pub fn by_name(name: &str, dim: usize, seed: u64) -> Result<Self> {
        match name {
            "rosenbrock" => Self::rosenbrock(dim),
            "ackley" => Self::ackley(dim),
            "levy" => Self::levy(dim),
            "gaussian_mixture" | "mixture" => {
                Self::gaussian_mixture(make_gaussian_mixture(seed, dim, DEFAULT_MIXTURE_COMPONENTS)?)
            }
            other => Err(Error::InvalidInput(format!("unknown test function '{other}'"))),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        match &self.objective {
            Objective::Rosenbrock => rosenbrock(x),
            Objective::Ackley => Ok(ackley(x)),
            Objective::Levy => Ok(levy(x)),
            Objective::GaussianMixture(spec) => gaussian_mixture_eval(spec, x),
        }
    }

    /// Distance of `value` from the optimum, clamped at 0.
    pub fn gap(&self, value: f64) -> f64 {
        self.sense.gap(value, self.optimum_value).max(0.0)
    }
}

fn estimate_mixture_maximum(spec: &GaussianMixtureSpec, bounds: &Domain) -> Result<(Vec<f64>, f64)> {
    let neg = |x: &[f64]| -gaussian_mixture_eval(spec, x).unwrap_or(f64::NEG_INFINITY);
    let steps = vec![1e-7; bounds.dim()];
    let cfg = BoxMinimizerConfig {
        max_iters: 500,
        ftol: 1e-15,
        gtol: 1e-10,
        memory: 10,
    };
    let mut starts: Vec<Vec<f64>> = spec.means.clone();
    starts.extend(sobol_samples(bounds, 256.min(1 << (4 + bounds.dim().min(4))), 1)?);
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for s in starts {
        let mut s = s;
        bounds.clamp(&mut s);
        let r = minimize_box(
            |x| (neg(x), central_gradient(neg, x, &steps, bounds.lower(), bounds.upper())),
            &s,
            bounds.lower(),
            bounds.upper(),
            &cfg,
        );
        let value = gaussian_mixture_eval(spec, &r.x)?;
        if value > best.1 {
            best = (r.x, value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_values() {
        assert_eq!(rosenbrock(&[1.0; 7]).unwrap(), 0.0);
        assert_eq!(rosenbrock(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(rosenbrock(&[0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(rosenbrock(&[0.0]).is_err());
    }

    #[test]
    fn ackley_values() {
        assert!(ackley(&[0.0; 5]).abs() < 1e-12);
        let x = [0.3, -1.7, 2.2];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(ackley(&x), ackley(&neg));
    }

    #[test]
    fn levy_values() {
        assert!(levy(&[1.0; 4]).abs() < 1e-12);
        assert!((levy(&[0.0]) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn mixture_construction() {
        let spec = make_gaussian_mixture(7, 3, 5).unwrap();
        assert!((spec.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..5 {
            let eig = spec.covariance(j).symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|l| *l >= 0.1 - 1e-12 && *l <= 2.0 + 1e-12));
            assert!(spec.means[j].iter().all(|m| (-5.0..5.0).contains(m)));
        }
        assert_eq!(spec, make_gaussian_mixture(7, 3, 5).unwrap());
        assert_ne!(spec, make_gaussian_mixture(8, 3, 5).unwrap());
    }

    #[test]
    fn single_component_peak() {
        let spec = make_gaussian_mixture(1, 2, 1).unwrap();
        let v = gaussian_mixture_eval(&spec, &spec.means[0]).unwrap();
        assert_eq!(v, spec.weights[0]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn well_separated_components() {
        let spec = GaussianMixtureSpec::new(
            vec![0.3, 0.7],
            vec![vec![-4.0, -4.0], vec![4.0, 4.0]],
            vec![vec![0.5, 0.0, 0.0, 0.5], vec![2.0, 0.0, 0.0, 2.0]],
            0,
        )
        .unwrap();
        let v = gaussian_mixture_eval(&spec, &[-4.0, -4.0]).unwrap();
        assert!((v - 0.3).abs() < 1e-6);
    }

    #[test]
    fn noise_free_evaluation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = |x: &[f64]| levy(x);
        assert_eq!(noisy_eval(f, &[0.2, 0.4], 0.0, &mut rng), levy(&[0.2, 0.4]));
    }

    #[test]
    fn mixture_test_function_optimum() {
        let tf = TestFunction::by_name("gaussian_mixture", 2, 11).unwrap();
        assert!(tf.optimum_estimated);
        assert_eq!(tf.evaluate(&tf.optimum_point).unwrap(), tf.optimum_value);
        assert!(tf.bounds.contains(&tf.optimum_point));
        for p in sobol_samples(&tf.bounds, 4096, 1).unwrap() {
            assert!(tf.evaluate(&p).unwrap() <= tf.optimum_value + 1e-12);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(TestFunction::by_name("branin", 2, 0).is_err());
    }
}
