//! Experiment orchestration: the optimization loop, baselines, metrics and
//! file outputs.

mod config;
mod metrics;
mod output;
mod trial;

use rayon::prelude::*;

pub use config::{ConfigFile, ExperimentConfig, OneOrMany, StrategyKind};
pub use metrics::{
    aggregate, compute_metrics, median, regret_curve, AggregateSummary, MetricsSummary, RegretCurve, Stats,
    CONVERGENCE_THRESHOLDS,
};
pub use output::{
    load_outputs, read_trace, write_aggregate_csv, write_outputs, write_summary_csv, write_trace, CellManifest,
    Manifest, TrialEntry, AGGREGATE_COLUMNS, AGGREGATE_FILE, MANIFEST_FILE, SUMMARY_COLUMNS, SUMMARY_FILE, TRACE_DIR,
};
pub use trial::{
    initial_design, random_search_points, run_trial, TrialRecord, TrialTrace, HYPER_RESTARTS, NOISE_FLOOR,
};

use crate::benchmarks::TestFunction;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub trace: Option<TrialTrace>,
    pub metrics: Option<MetricsSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub function: TestFunction,
    pub trials: Vec<TrialOutcome>,
    pub aggregate: AggregateSummary,
}

impl ExperimentResult {
    pub fn traces(&self) -> Vec<TrialTrace> {
        self.trials.iter().filter_map(|t| t.trace.clone()).collect()
    }

    pub fn metrics(&self) -> Vec<MetricsSummary> {
        self.trials.iter().filter_map(|t| t.metrics.clone()).collect()
    }
}

/// Builds the benchmark named in `cfg`. The mixture landscape is drawn from
/// `base_seed`, so every trial and strategy of a cell sees the same one.
pub fn test_function_for(cfg: &ExperimentConfig) -> Result<TestFunction> {
    TestFunction::by_name(&cfg.function, cfg.dim, cfg.base_seed)
}

/// Runs all trials of one cell on the current rayon pool.
///
/// Failed trials are recorded and excluded from the aggregate. With
/// `record_timing` off, iteration wall times are zeroed so that outputs are
/// reproducible byte for byte.
pub fn run_experiment(cfg: &ExperimentConfig, record_timing: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    let function = test_function_for(cfg)?;
    let trials: Vec<TrialOutcome> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|index| {
            let seed = cfg.trial_seed(index);
            let run = run_trial(cfg, &function, seed).and_then(|mut trace| {
                if !record_timing {
                    trace.strip_timing();
                }
                let m = compute_metrics(&trace, &function, cfg.n_init, cfg.grid_bins)?;
                Ok((trace, m))
            });
            match run {
                Ok((trace, m)) => TrialOutcome {
                    index,
                    seed,
                    trace: Some(trace),
                    metrics: Some(m),
                    error: None,
                },
                Err(e) => TrialOutcome {
                    index,
                    seed,
                    trace: None,
                    metrics: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<MetricsSummary> = trials.iter().filter_map(|t| t.metrics.clone()).collect();
    let aggregate = aggregate(&ok, trials.len() - ok.len());
    Ok(ExperimentResult {
        config: cfg.clone(),
        function,
        trials,
        aggregate,
    })
}
