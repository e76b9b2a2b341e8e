use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adaptive_gp::benchmarks::TestFunction;
use adaptive_gp::harness::{
    compute_metrics, load_outputs, run_experiment, run_trial, write_aggregate_csv, write_outputs, ConfigFile,
    ExperimentConfig, StrategyKind,
};
use adaptive_gp::{Error, Result};

#[derive(Parser)]
#[command(name = "adaptive-gp", version, about = "Adaptive GP-UCB optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a JSON experiment grid and write traces and summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `n_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Override `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to available parallelism).
        #[arg(long)]
        parallel: Option<usize>,
        /// Record iteration wall times; outputs are then no longer
        /// byte-reproducible.
        #[arg(long)]
        timing: bool,
    },
    /// Recompute metrics from an output directory and write the aggregate CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single trial and print its summary.
    Bench {
        #[arg(long)]
        function: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value = "adaptive_gp")]
        strategy: String,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
    },
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::InvalidInput("--parallel must be >= 1".into()));
        }
        builder = builder.num_threads(k);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))
}

fn run(
    config: PathBuf,
    out: PathBuf,
    trials: Option<usize>,
    seed: Option<u64>,
    parallel: Option<usize>,
    timing: bool,
) -> Result<()> {
    let mut file = ConfigFile::from_path(&config)?;
    if let Some(n) = trials {
        file.n_trials = n;
    }
    if let Some(s) = seed {
        file.base_seed = s;
    }
    let cells = file.expand()?;
    let pool = thread_pool(parallel)?;
    let mut results = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        eprintln!("[{}/{}] {}", i + 1, cells.len(), cell.tag());
        let res = pool.install(|| run_experiment(cell, timing))?;
        for t in res.trials.iter().filter(|t| t.error.is_some()) {
            eprintln!("  trial {} failed: {}", t.index, t.error.as_deref().unwrap_or(""));
        }
        results.push(res);
    }
    write_outputs(&results, &out)
}

fn report(input: PathBuf, out: PathBuf) -> Result<()> {
    let results = load_outputs(&input)?;
    write_aggregate_csv(&results, &out)
}

#[allow(clippy::too_many_arguments)]
fn bench(
    function: String,
    dim: usize,
    noise: f64,
    strategy: String,
    budget: usize,
    seed: u64,
    kappa: f64,
    lambda: f64,
) -> Result<()> {
    let strategy = StrategyKind::parse(&strategy)?;
    let cfg = ExperimentConfig {
        function,
        dim,
        noise_std: noise,
        strategy,
        kappa_init: kappa,
        lambda_init: if strategy == StrategyKind::FixedUcb { 0.0 } else { lambda },
        budget,
        n_trials: 1,
        base_seed: seed,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let f = TestFunction::by_name(&cfg.function, dim, seed)?;
    let trace = run_trial(&cfg, &f, cfg.trial_seed(0))?;
    let m = compute_metrics(&trace, &f, cfg.n_init, cfg.grid_bins)?;
    let last = trace.records.last().expect("budget > 0");
    let conv = |v: Option<usize>| v.map_or_else(|| "not reached".to_string(), |t| t.to_string());
    println!("function          {} (d={dim}, noise={noise})", f.name);
    println!("strategy          {strategy}");
    println!("seed              {seed}");
    println!("evaluations       {}", trace.records.len());
    println!("optimum           {}", f.optimum_value);
    println!("best value        {}", m.best_value);
    println!("simple regret     {}", m.simple_regret);
    println!("conv 10% / 5% / 1%  {} / {} / {}", conv(m.convergence_iters[0]), conv(m.convergence_iters[1]), conv(m.convergence_iters[2]));
    println!("exploration       {}", m.exploration_efficiency);
    println!("mean iter seconds {:.4}", m.mean_iter_seconds);
    println!("final kappa       {}", last.kappa);
    println!("final lambda      {}", last.lambda);
    if let Some(k) = trace.final_kernel {
        println!("final kernel      amplitude_sq={} length_scale={}", k.amplitude_sq, k.length_scale);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            trials,
            seed,
            parallel,
            timing,
        } => run(config, out, trials, seed, parallel, timing),
        Command::Report { input, out } => report(input, out),
        Command::Bench {
            function,
            dim,
            noise,
            strategy,
            budget,
            seed,
            kappa,
            lambda,
        } => bench(function, dim, noise, strategy, budget, seed, kappa, lambda),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
