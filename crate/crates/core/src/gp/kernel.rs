//! Stationary isotropic covariance functions.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// Matérn with smoothness ν = 5/2.
    Matern25,
    SquaredExponential,
    RationalQuadratic,
}

/// Hyperparameters of an isotropic stationary kernel.
///
/// `rq_alpha` is only read by [`KernelKind::RationalQuadratic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub amplitude_sq: f64,
    pub length_scale: f64,
    pub kind: KernelKind,
    pub rq_alpha: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self::matern25(1.0, 0.2)
    }
}

impl KernelParams {
    pub fn matern25(amplitude_sq: f64, length_scale: f64) -> Self {
        Self {
            amplitude_sq,
            length_scale,
            kind: KernelKind::Matern25,
            rq_alpha: 1.0,
        }
    }

    pub fn squared_exponential(amplitude_sq: f64, length_scale: f64) -> Self {
        Self {
            kind: KernelKind::SquaredExponential,
            ..Self::matern25(amplitude_sq, length_scale)
        }
    }

    pub fn rational_quadratic(amplitude_sq: f64, length_scale: f64, alpha: f64) -> Self {
        Self {
            amplitude_sq,
            length_scale,
            kind: KernelKind::RationalQuadratic,
            rq_alpha: alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.amplitude_sq) || !ok(self.length_scale) || !ok(self.rq_alpha) {
            return Err(Error::InvalidInput(format!(
                "kernel parameters must be finite and positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Covariance as a function of the Euclidean distance `r`.
    pub fn eval_distance(&self, r: f64) -> f64 {
        let l = self.length_scale;
        match self.kind {
            KernelKind::Matern25 => self.amplitude_sq * matern25_unit(r / l),
            KernelKind::SquaredExponential => self.amplitude_sq * (-0.5 * (r / l).powi(2)).exp(),
            KernelKind::RationalQuadratic => {
                let a = self.rq_alpha;
                self.amplitude_sq * (1.0 + r * r / (2.0 * a * l * l)).powf(-a)
            }
        }
    }

    /// Prior variance `k(x, x)`.
    pub fn prior_variance(&self) -> f64 {
        self.amplitude_sq
    }

    /// Covariance between two points. Assumes equal lengths.
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.eval_distance(euclidean(a, b))
    }
}

/// Unit-amplitude Matérn-5/2 at scaled distance `s = r / l`.
pub fn matern25_unit(s: f64) -> f64 {
    let z = SQRT_5 * s.abs();
    (1.0 + z + z * z / 3.0) * (-z).exp()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates `k(a, b)`.
pub fn kernel_eval(a: &[f64], b: &[f64], params: &KernelParams) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(params.eval_unchecked(a, b))
}

/// Constant kernel times unit Matérn-5/2, with a single merged amplitude.
pub fn composite_kernel(a: &[f64], b: &[f64], params: &KernelParams) -> Result<f64> {
    if params.kind != KernelKind::Matern25 {
        return Err(Error::InvalidInput(
            "composite kernel is defined over a Matérn-5/2 factor".into(),
        ));
    }
    check_dim(a.len(), b.len())?;
    let constant = params.amplitude_sq;
    Ok(constant * matern25_unit(euclidean(a, b) / params.length_scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_is_amplitude() {
        let p = KernelParams::matern25(2.0, 1.0);
        assert_eq!(kernel_eval(&[0.3, 0.1], &[0.3, 0.1], &p).unwrap(), 2.0);
        let se = KernelParams::squared_exponential(3.0, 0.5);
        assert_eq!(kernel_eval(&[1.0], &[1.0], &se).unwrap(), 3.0);
        let rq = KernelParams::rational_quadratic(0.5, 0.5, 2.0);
        assert_eq!(kernel_eval(&[1.0], &[1.0], &rq).unwrap(), 0.5);
    }

    #[test]
    fn matern_decays() {
        let p = KernelParams::matern25(1.0, 1.0);
        assert!(kernel_eval(&[0.0], &[100.0], &p).unwrap() < 1e-40);
    }

    #[test]
    fn matern_at_unit_distance() {
        // 2^(1-ν)/Γ(ν) z^ν K_ν(z) at ν = 5/2, z = √5, from scipy.special.kv
        let p = KernelParams::matern25(1.0, 1.0);
        let v = kernel_eval(&[0.0, 0.0], &[0.6, 0.8], &p).unwrap();
        assert!((v - 0.523_994_108_831_820_5).abs() < 1e-12);
    }

    #[test]
    fn composite_matches_kernel_eval() {
        let p = KernelParams::matern25(4.0, 1.0);
        let c = composite_kernel(&[0.0], &[1.0], &p).unwrap();
        assert!((c - 2.095_976_435_327_281).abs() < 1e-12);
        assert_eq!(composite_kernel(&[0.2], &[0.2], &p).unwrap(), 4.0);
        for r in [0.0, 0.1, 0.7, 2.5] {
            let a = [0.1, -0.4];
            let b = [0.1 + r, -0.4];
            assert_eq!(
                composite_kernel(&a, &b, &p).unwrap(),
                kernel_eval(&a, &b, &p).unwrap()
            );
        }
        let se = KernelParams::squared_exponential(1.0, 1.0);
        assert!(composite_kernel(&[0.0], &[1.0], &se).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = KernelParams::default();
        assert!(matches!(
            kernel_eval(&[0.0], &[0.0, 1.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symmetric() {
        let p = KernelParams::rational_quadratic(1.3, 0.4, 0.7);
        let a = [0.12, 0.98, -0.3];
        let b = [0.5, -0.1, 0.2];
        assert_eq!(
            kernel_eval(&a, &b, &p).unwrap(),
            kernel_eval(&b, &a, &p).unwrap()
        );
    }

    #[test]
    fn rq_approaches_se_for_large_alpha() {
        let se = KernelParams::squared_exponential(1.0, 0.7);
        let rq = KernelParams::rational_quadratic(1.0, 0.7, 1e7);
        let r = 0.9;
        assert!((se.eval_distance(r) - rq.eval_distance(r)).abs() < 1e-6);
    }
}
