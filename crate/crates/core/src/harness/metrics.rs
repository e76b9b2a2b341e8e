use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::trial::TrialTrace;
use crate::benchmarks::TestFunction;
use crate::error::{Error, Result};

/// Relative-gap thresholds for the convergence iteration counts.
pub const CONVERGENCE_THRESHOLDS: [f64; 3] = [0.10, 0.05, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub best_value: f64,
    pub simple_regret: f64,
    /// First 1-based iteration whose gap is within each threshold of the
    /// gap at the end of the initial design; `None` when never reached.
    pub convergence_iters: [Option<usize>; 3],
    pub exploration_efficiency: f64,
    pub mean_iter_seconds: f64,
}

/// Metrics of one complete trace.
pub fn compute_metrics(trace: &TrialTrace, function: &TestFunction, n_init: usize, grid_bins: usize) -> Result<MetricsSummary> {
    let records = &trace.records;
    if records.is_empty() || n_init == 0 || n_init > records.len() {
        return Err(Error::InvalidInput(format!(
            "trace of length {} is incomplete for n_init = {n_init}",
            records.len()
        )));
    }
    if grid_bins == 0 {
        return Err(Error::InvalidInput("grid_bins must be >= 1".into()));
    }
    let best_value = records[records.len() - 1].best_true;
    let simple_regret = function.gap(best_value);

    let init_gap = function.gap(records[n_init - 1].best_true);
    let mut convergence_iters = [None; 3];
    for (slot, thr) in convergence_iters.iter_mut().zip(CONVERGENCE_THRESHOLDS) {
        *slot = records
            .iter()
            .find(|r| function.gap(r.best_true) <= thr * init_gap)
            .map(|r| r.t);
    }

    let bins = grid_bins as f64;
    let cells: HashSet<Vec<usize>> = records
        .iter()
        .map(|r| {
            r.x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let u = (v - function.bounds.lower()[i]) / function.bounds.width(i);
                    ((u * bins).floor().max(0.0) as usize).min(grid_bins - 1)
                })
                .collect()
        })
        .collect();

    Ok(MetricsSummary {
        best_value,
        simple_regret,
        convergence_iters,
        exploration_efficiency: cells.len() as f64 / records.len() as f64,
        mean_iter_seconds: records.iter().map(|r| r.iter_seconds).sum::<f64>() / records.len() as f64,
    })
}

/// Mean, median and standard deviation (sample, n − 1) of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            median: median(values),
            std,
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Across-trial summary of one experimental cell. Statistics are over
/// successful trials only and are `None` when every trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub n_success: usize,
    pub n_failed: usize,
    pub best_value: Option<Stats>,
    pub simple_regret: Option<Stats>,
}

pub fn aggregate(summaries: &[MetricsSummary], n_failed: usize) -> AggregateSummary {
    let best: Vec<f64> = summaries.iter().map(|s| s.best_value).collect();
    let regret: Vec<f64> = summaries.iter().map(|s| s.simple_regret).collect();
    AggregateSummary {
        n_success: summaries.len(),
        n_failed,
        best_value: Stats::of(&best),
        simple_regret: Stats::of(&regret),
    }
}

/// Per-iteration regret series over a set of equal-length traces.
///
/// `simple[k][t-1]` is `r_t = min_{τ≤t} gap(f(x_τ))` for trace `k`,
/// `cumulative[k][t-1]` is `R_t = Σ_{τ≤t} gap(f(x_τ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub simple: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    pub simple_mean: Vec<f64>,
    pub simple_std: Vec<f64>,
    pub cumulative_mean: Vec<f64>,
    pub cumulative_std: Vec<f64>,
}

impl RegretCurve {
    /// `R_t / t` of every trace at 1-based iteration `t`.
    pub fn average_regret_at(&self, t: usize) -> Vec<f64> {
        self.cumulative.iter().map(|c| c[t - 1] / t as f64).collect()
    }
}

fn column_stats(rows: &[Vec<f64>], len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|t| {
            let col: Vec<f64> = rows.iter().map(|r| r[t]).collect();
            let s = Stats::of(&col).expect("at least one trace");
            (s.mean, s.std)
        })
        .unzip()
}

pub fn regret_curve(traces: &[TrialTrace], function: &TestFunction) -> Result<RegretCurve> {
    let len = match traces.first() {
        Some(t) => t.records.len(),
        None => return Err(Error::InvalidInput("regret_curve needs at least one trace".into())),
    };
    if traces.iter().any(|t| t.records.len() != len) {
        return Err(Error::InvalidInput("traces must have equal length".into()));
    }
    let mut simple = Vec::with_capacity(traces.len());
    let mut cumulative = Vec::with_capacity(traces.len());
    for trace in traces {
        let mut best = f64::INFINITY;
        let mut total = 0.0;
        let mut s = Vec::with_capacity(len);
        let mut c = Vec::with_capacity(len);
        for r in &trace.records {
            let gap = function.gap(r.f_true);
            best = best.min(gap);
            total += gap;
            s.push(best);
            c.push(total);
        }
        simple.push(s);
        cumulative.push(c);
    }
    let (simple_mean, simple_std) = column_stats(&simple, len);
    let (cumulative_mean, cumulative_std) = column_stats(&cumulative, len);
    Ok(RegretCurve {
        simple,
        cumulative,
        simple_mean,
        simple_std,
        cumulative_mean,
        cumulative_std,
    })
}
