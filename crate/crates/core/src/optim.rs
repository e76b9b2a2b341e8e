//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! A projected L-BFGS: the two-loop recursion runs over the free variables
//! (those not pinned at an active bound) and a backtracking Armijo search is
//! performed along the projected path `P(x + a d)`. Every accepted step
//! strictly decreases the objective, so the returned point is never worse
//! than the start.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct BoxMinimizerConfig {
    pub max_iters: usize,
    /// Relative objective-decrease tolerance.
    pub ftol: f64,
    /// Infinity-norm tolerance on the projected gradient.
    pub gtol: f64,
    /// Number of stored correction pairs.
    pub memory: usize,
}

impl Default for BoxMinimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            ftol: 1e-5,
            gtol: 1e-5,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pinned(x: f64, g: f64, lo: f64, hi: f64) -> bool {
    (x <= lo && g > 0.0) || (x >= hi && g < 0.0)
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` returns the objective and its gradient. Non-finite objective values
/// are treated as `+inf` and rejected by the line search.
pub fn minimize_box<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    cfg: &BoxMinimizerConfig,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return MinimizeResult {
            x,
            value: fx,
            iterations: 0,
            converged: false,
        };
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let free: Vec<bool> = (0..n)
            .map(|i| !pinned(x[i], g[i], lower[i], upper[i]))
            .collect();
        let pg_norm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg_norm <= cfg.gtol {
            converged = true;
            break;
        }

        let mut d = two_loop(&g, &free, &history);
        if dot(&d, &g) >= 0.0 {
            history.clear();
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        }

        let mut step = if history.is_empty() {
            (1.0 / dot(&d, &d).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial, lower, upper);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                accepted = Some((trial, ft, gt, moved));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;

        let Some((x_new, f_new, g_new, s)) = accepted else {
            // no descent along the projected path: treat as stationary
            converged = true;
            break;
        };
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - f_new) / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        if rel <= cfg.ftol {
            converged = true;
            break;
        }
    }

    MinimizeResult {
        x,
        value: fx,
        iterations,
        converged,
    }
}

fn two_loop(g: &[f64], free: &[bool], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(free)
            .map(|(a, f)| if *f { *a } else { 0.0 })
            .collect()
    };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(&mask(s), &q);
        let ym = mask(y);
        for (qi, yi) in q.iter_mut().zip(&ym) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let ym = mask(y);
        let yy = dot(&ym, &ym);
        let sy = dot(&mask(s), &ym);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(&mask(y), &q);
        let sm = mask(s);
        for (qi, si) in q.iter_mut().zip(&sm) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Central-difference gradient, with perturbations kept inside the box.
pub fn central_gradient<F>(mut f: F, x: &[f64], steps: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = (x[i] + steps[i]).min(upper[i]);
            let lo = (x[i] - steps[i]).max(lower[i]);
            if hi <= lo {
                return 0.0;
            }
            probe[i] = hi;
            let f_hi = f(&probe);
            probe[i] = lo;
            let f_lo = f(&probe);
            probe[i] = x[i];
            (f_hi - f_lo) / (hi - lo)
        })
        .collect()
}
