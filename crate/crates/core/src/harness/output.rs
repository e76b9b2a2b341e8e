use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{aggregate, compute_metrics, MetricsSummary, Stats};
use super::trial::{TrialRecord, TrialTrace};
use super::{ExperimentResult, TrialOutcome};
use crate::benchmarks::TestFunction;
use crate::error::{Error, Result};
use crate::gp::KernelParams;

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRACE_DIR: &str = "traces";

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "function",
    "dim",
    "noise_std",
    "strategy",
    "kappa_init",
    "lambda_init",
    "trial",
    "seed",
    "best_value",
    "simple_regret",
    "conv_iters_10",
    "conv_iters_5",
    "conv_iters_1",
    "exploration_efficiency",
    "mean_iter_seconds",
];

pub const AGGREGATE_COLUMNS: [&str; 17] = [
    "function",
    "dim",
    "noise_std",
    "strategy",
    "kappa_init",
    "lambda_init",
    "n_success",
    "n_failed",
    "best_mean",
    "best_median",
    "best_std",
    "regret_mean",
    "regret_median",
    "regret_std",
    "exploration_efficiency_mean",
    "mean_iter_seconds",
    "optimum_value",
];

/// Everything besides the traces that is needed to recompute the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cells: Vec<CellManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellManifest {
    pub config: ExperimentConfig,
    pub function: TestFunction,
    pub trials: Vec<TrialEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub trial: usize,
    pub seed: u64,
    /// Trace path relative to the output directory; absent for failed trials.
    pub trace: Option<String>,
    pub final_kernel: Option<KernelParams>,
    pub error: Option<String>,
}

fn trace_path(cfg: &ExperimentConfig, trial: usize) -> String {
    format!("{TRACE_DIR}/{}/trial_{trial:03}.jsonl", cfg.tag())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_trace(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut w = create_file(path)?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::format(path, e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::format(path, e))?);
    }
    Ok(records)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "NA".to_string(), |t| t.to_string())
}

fn cell_fields(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        cfg.function.clone(),
        cfg.dim.to_string(),
        cfg.noise_std.to_string(),
        cfg.strategy.to_string(),
        cfg.kappa_init.to_string(),
        cfg.lambda_init.to_string(),
    ]
}

fn summary_row(cfg: &ExperimentConfig, trial: usize, seed: u64, m: &MetricsSummary) -> Vec<String> {
    let mut row = cell_fields(cfg);
    row.extend([
        trial.to_string(),
        seed.to_string(),
        m.best_value.to_string(),
        m.simple_regret.to_string(),
        fmt_opt(m.convergence_iters[0]),
        fmt_opt(m.convergence_iters[1]),
        fmt_opt(m.convergence_iters[2]),
        m.exploration_efficiency.to_string(),
        m.mean_iter_seconds.to_string(),
    ]);
    row
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    let wrap = |e: csv::Error| Error::format(path, e);
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per successful trial, in cell then trial order.
pub fn write_summary_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let rows = results.iter().flat_map(|res| {
        res.trials.iter().filter_map(move |t| {
            t.metrics
                .as_ref()
                .map(|m| summary_row(&res.config, t.index, t.seed, m))
        })
    });
    write_csv(path, &SUMMARY_COLUMNS, rows)
}

/// One row per cell with across-trial statistics.
pub fn write_aggregate_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let stat = |s: Option<Stats>, f: fn(&Stats) -> f64| s.map_or_else(|| "NA".to_string(), |s| f(&s).to_string());
    let rows = results.iter().map(|res| {
        let ok: Vec<&MetricsSummary> = res.trials.iter().filter_map(|t| t.metrics.as_ref()).collect();
        let mean_of = |g: fn(&MetricsSummary) -> f64| {
            if ok.is_empty() {
                "NA".to_string()
            } else {
                (ok.iter().map(|m| g(m)).sum::<f64>() / ok.len() as f64).to_string()
            }
        };
        let a = &res.aggregate;
        let mut row = cell_fields(&res.config);
        row.extend([
            a.n_success.to_string(),
            a.n_failed.to_string(),
            stat(a.best_value, |s| s.mean),
            stat(a.best_value, |s| s.median),
            stat(a.best_value, |s| s.std),
            stat(a.simple_regret, |s| s.mean),
            stat(a.simple_regret, |s| s.median),
            stat(a.simple_regret, |s| s.std),
            mean_of(|m| m.exploration_efficiency),
            mean_of(|m| m.mean_iter_seconds),
            res.function.optimum_value.to_string(),
        ]);
        row
    });
    write_csv(path, &AGGREGATE_COLUMNS, rows)
}

/// Writes traces, the manifest, the per-trial summary and the aggregate.
pub fn write_outputs(results: &[ExperimentResult], out_dir: &Path) -> Result<()> {
    create_dir(out_dir)?;
    let mut cells = Vec::with_capacity(results.len());
    for res in results {
        create_dir(&out_dir.join(TRACE_DIR).join(res.config.tag()))?;
        let mut entries = Vec::with_capacity(res.trials.len());
        for t in &res.trials {
            let rel = t.trace.as_ref().map(|_| trace_path(&res.config, t.index));
            if let (Some(trace), Some(rel)) = (&t.trace, &rel) {
                write_trace(&trace.records, &out_dir.join(rel))?;
            }
            entries.push(TrialEntry {
                trial: t.index,
                seed: t.seed,
                trace: rel,
                final_kernel: t.trace.as_ref().and_then(|tr| tr.final_kernel),
                error: t.error.clone(),
            });
        }
        cells.push(CellManifest {
            config: res.config.clone(),
            function: res.function.clone(),
            trials: entries,
        });
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut w = create_file(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &Manifest { cells }).map_err(|e| Error::format(&manifest_path, e))?;
    writeln!(w).map_err(|e| Error::io(&manifest_path, e))?;
    w.flush().map_err(|e| Error::io(&manifest_path, e))?;

    write_summary_csv(results, &out_dir.join(SUMMARY_FILE))?;
    write_aggregate_csv(results, &out_dir.join(AGGREGATE_FILE))
}

/// Rebuilds results from an output directory, recomputing every metric from
/// the trace files.
pub fn load_outputs(dir: &Path) -> Result<Vec<ExperimentResult>> {
    let manifest_path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&manifest_path, e))?;
    let mut results = Vec::with_capacity(manifest.cells.len());
    for cell in manifest.cells {
        let mut trials = Vec::with_capacity(cell.trials.len());
        for entry in cell.trials {
            let outcome = match &entry.trace {
                Some(rel) => {
                    let path = dir.join(rel);
                    let trace = TrialTrace {
                        seed: entry.seed,
                        records: read_trace(&path)?,
                        final_kernel: entry.final_kernel,
                    };
                    let metrics = compute_metrics(&trace, &cell.function, cell.config.n_init, cell.config.grid_bins)
                        .map_err(|e| Error::format(&path, e))?;
                    TrialOutcome {
                        index: entry.trial,
                        seed: entry.seed,
                        trace: Some(trace),
                        metrics: Some(metrics),
                        error: None,
                    }
                }
                None => TrialOutcome {
                    index: entry.trial,
                    seed: entry.seed,
                    trace: None,
                    metrics: None,
                    error: entry.error.clone(),
                },
            };
            trials.push(outcome);
        }
        let ok: Vec<MetricsSummary> = trials.iter().filter_map(|t| t.metrics.clone()).collect();
        let aggregate = aggregate(&ok, trials.len() - ok.len());
        results.push(ExperimentResult {
            config: cell.config,
            function: cell.function,
            trials,
            aggregate,
        });
    }
    Ok(results)
}
