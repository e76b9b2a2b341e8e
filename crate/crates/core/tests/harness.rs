use std::process::Command;

use adaptive_gp::benchmarks::TestFunction;
use adaptive_gp::harness::{
    load_outputs, read_trace, regret_curve, run_experiment, run_trial, write_outputs, ExperimentConfig,
    StrategyKind, AGGREGATE_FILE, MANIFEST_FILE, SUMMARY_COLUMNS, SUMMARY_FILE,
};
use adaptive_gp::search::Sobol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(function: &str, strategy: StrategyKind) -> ExperimentConfig {
    ExperimentConfig {
        function: function.into(),
        dim: 2,
        noise_std: 0.01,
        strategy,
        kappa_init: 1.0,
        lambda_init: if strategy == StrategyKind::AdaptiveGp { 0.01 } else { 0.0 },
        budget: 14,
        n_trials: 3,
        base_seed: 5,
        n_global: 128,
        mc_samples: 200,
        ..ExperimentConfig::default()
    }
}

const ALL: [StrategyKind; 4] = [
    StrategyKind::AdaptiveGp,
    StrategyKind::FixedUcb,
    StrategyKind::ExpectedImprovement,
    StrategyKind::RandomSearch,
];

#[test]
fn every_strategy_honours_the_loop_contract() {
    for function in ["levy", "gaussian_mixture"] {
        for strategy in ALL {
            let cfg = small(function, strategy);
            let f = TestFunction::by_name(function, 2, cfg.base_seed).unwrap();
            let mut a = run_trial(&cfg, &f, 17).unwrap();
            let mut b = run_trial(&cfg, &f, 17).unwrap();
            a.strip_timing();
            b.strip_timing();
            assert_eq!(a, b, "{function} {strategy}");
            assert_eq!(a.records.len(), cfg.budget);
            assert_eq!(a.seed, 17);
            for (i, r) in a.records.iter().enumerate() {
                assert_eq!(r.t, i + 1);
                assert!(f.bounds.contains(&r.x));
                assert_eq!(r.f_true, f.evaluate(&r.x).unwrap());
            }
            for w in a.records.windows(2) {
                assert!(!f.sense.better(w[0].best_true, w[1].best_true), "best-so-far regressed");
            }
            assert_eq!(a.final_kernel.is_some(), strategy != StrategyKind::RandomSearch);
        }
    }
}

#[test]
fn baselines_record_constant_coefficients() {
    let f = TestFunction::levy(2).unwrap();
    for strategy in [StrategyKind::FixedUcb, StrategyKind::ExpectedImprovement, StrategyKind::RandomSearch] {
        let cfg = small("levy", strategy);
        let trace = run_trial(&cfg, &f, 1).unwrap();
        let first = &trace.records[0];
        for r in &trace.records {
            assert_eq!((r.kappa, r.lambda), (first.kappa, first.lambda));
            assert_eq!((r.delta, r.delta_bar, r.i_mc, r.i_bar), (0.0, 0.0, 0.0, 0.0));
        }
    }
}

#[test]
fn random_search_follows_the_seeded_sampler() {
    let seed = 23;
    let budget = 14;
    let n_init = 5;
    // standalone sampler: shifted Sobol prefix, then uniform draws
    let mut shift_rng = ChaCha8Rng::seed_from_u64(seed);
    shift_rng.set_stream(1);
    let shift: Vec<f64> = (0..2).map(|_| shift_rng.random::<f64>()).collect();
    let mut uniform = ChaCha8Rng::seed_from_u64(seed);
    uniform.set_stream(3);
    let mut expected: Vec<Vec<f64>> = Sobol::new(2)
        .unwrap()
        .take(n_init)
        .map(|p| p.iter().zip(&shift).map(|(a, s)| (a + s).fract()).collect())
        .collect();
    expected.extend((n_init..budget).map(|_| vec![uniform.random::<f64>(), uniform.random::<f64>()]));

    let f = TestFunction::levy(2).unwrap();
    for noise_std in [0.0, 0.05] {
        let cfg = ExperimentConfig { noise_std, ..small("levy", StrategyKind::RandomSearch) };
        let trace = run_trial(&cfg, &f, seed).unwrap();
        for (r, u) in trace.records.iter().zip(&expected) {
            assert_eq!(r.x, f.bounds.from_unit(u));
        }
    }
}

#[test]
fn fixed_ucb_equals_adaptive_with_frozen_coefficients() {
    let f = TestFunction::levy(2).unwrap();
    let fixed = small("levy", StrategyKind::FixedUcb);
    let frozen = ExperimentConfig {
        strategy: StrategyKind::AdaptiveGp,
        beta: 0.0,
        gamma: 0.0,
        lambda_init: 0.0,
        ..fixed.clone()
    };
    let a = run_trial(&fixed, &f, 4).unwrap();
    let b = run_trial(&frozen, &f, 4).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.x, y.x);
        assert_eq!(x.y, y.y);
        assert_eq!(y.kappa, 1.0);
        assert_eq!(y.lambda, 0.0);
    }
}

#[test]
fn noise_free_trials_observe_true_values() {
    let f = TestFunction::levy(2).unwrap();
    let cfg = ExperimentConfig { noise_std: 0.0, ..small("levy", StrategyKind::ExpectedImprovement) };
    let trace = run_trial(&cfg, &f, 2).unwrap();
    assert!(trace.records.iter().all(|r| r.y == r.f_true));
}

#[test]
fn regret_curve_matches_direct_recomputation() {
    let cfg = small("levy", StrategyKind::FixedUcb);
    let res = run_experiment(&cfg, false).unwrap();
    let traces = res.traces();
    let curve = regret_curve(&traces, &res.function).unwrap();
    for (k, trace) in traces.iter().enumerate() {
        for t in 1..=trace.records.len() {
            let gaps: Vec<f64> = trace.records[..t].iter().map(|r| r.f_true - res.function.optimum_value).collect();
            let simple = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(curve.simple[k][t - 1], simple);
            assert!((curve.cumulative[k][t - 1] - gaps.iter().sum::<f64>()).abs() < 1e-12);
        }
        assert!(curve.cumulative[k].windows(2).all(|w| w[1] >= w[0]));
        // best_true is the running minimum of the same values
        let last = trace.records.last().unwrap();
        assert_eq!(last.best_true - res.function.optimum_value, curve.simple[k][trace.records.len() - 1]);
    }
}

#[test]
fn experiment_aggregates_and_seeds() {
    let cfg = small("levy", StrategyKind::ExpectedImprovement);
    let res = run_experiment(&cfg, false).unwrap();
    assert_eq!(res.trials.len(), 3);
    let seeds: Vec<u64> = res.trials.iter().map(|t| t.seed).collect();
    assert_eq!(seeds, vec![5, 6, 7]);
    let bests: Vec<f64> = res.metrics().iter().map(|m| m.best_value).collect();
    let mean = bests.iter().sum::<f64>() / bests.len() as f64;
    assert!((res.aggregate.best_value.unwrap().mean - mean).abs() < 1e-12);
    assert_eq!(res.aggregate.n_failed, 0);

    let other = run_experiment(&ExperimentConfig { base_seed: 50, ..cfg }, false).unwrap();
    assert_ne!(other.traces()[0].records, res.traces()[0].records);
    assert_eq!(other.traces()[0].records.len(), res.traces()[0].records.len());
}

#[test]
fn unknown_function_is_rejected() {
    assert!(run_experiment(&small("branin", StrategyKind::FixedUcb), false).is_err());
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let results = vec![
        run_experiment(&small("levy", StrategyKind::AdaptiveGp), false).unwrap(),
        run_experiment(&small("gaussian_mixture", StrategyKind::RandomSearch), false).unwrap(),
    ];
    write_outputs(&results, dir.path()).unwrap();

    let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
    assert_eq!(lines.count(), 6);
    assert!(dir.path().join(MANIFEST_FILE).exists());

    let loaded = load_outputs(dir.path()).unwrap();
    assert_eq!(loaded, results);
    for res in &loaded {
        for t in &res.trials {
            assert_eq!(t.trace.as_ref().unwrap().records.len(), res.config.budget);
        }
    }

    let first = dir
        .path()
        .join("traces")
        .join(results[0].config.tag())
        .join("trial_000.jsonl");
    assert_eq!(read_trace(&first).unwrap(), results[0].trials[0].trace.as_ref().unwrap().records);
    let line = std::fs::read_to_string(&first).unwrap();
    let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(line.lines().next().unwrap())
        .unwrap()
        .keys()
        .cloned()
        .collect();
    let mut expected = [
        "t", "x", "y", "f_true", "kappa", "lambda", "delta", "delta_bar", "i_mc", "i_bar", "best_true", "iter_seconds",
    ]
    .map(String::from)
    .to_vec();
    expected.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, expected);
}

#[test]
fn cli_report_recomputes_the_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.json");
    std::fs::write(
        &config,
        r#"{"function": "ackley", "dim": 2, "noise_std": [0.0, 0.01], "strategy": ["fixed_ucb", "random"],
            "kappa_init": [0.5, 2.0], "budget": 10, "n_trials": 2, "n_global": 64}"#,
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_adaptive-gp");
    let out = dir.path().join("out");
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--trials", "3", "--seed", "9", "--parallel", "2"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let report = dir.path().join("report.csv");
    let status = Command::new(exe)
        .args(["report", "--in"])
        .arg(&out)
        .arg("--out")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let written = std::fs::read_to_string(out.join(AGGREGATE_FILE)).unwrap();
    assert_eq!(std::fs::read_to_string(&report).unwrap(), written);
    // 2 noise levels x (2 fixed UCB κ + 1 random search)
    assert_eq!(written.lines().count(), 1 + 6);
    let loaded = load_outputs(&out).unwrap();
    assert!(loaded.iter().all(|r| r.trials.len() == 3 && r.config.base_seed == 9));
}

#[test]
fn cli_rejects_bad_input() {
    let exe = env!("CARGO_BIN_EXE_adaptive-gp");
    let dir = tempfile::tempdir().unwrap();
    let missing = Command::new(exe)
        .args(["run", "--config", "/nonexistent/grid.json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/grid.json"));
    let bench = Command::new(exe)
        .args(["bench", "--function", "levy", "--dim", "2", "--strategy", "cma_es"])
        .output()
        .unwrap();
    assert!(!bench.status.success());
}

#[test]
fn cli_bench_prints_a_summary() {
    let out = Command::new(env!("CARGO_BIN_EXE_adaptive-gp"))
        .args(["bench", "--function", "levy", "--dim", "2", "--noise", "0.01", "--strategy", "ei", "--budget", "12", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("simple regret"));
    assert!(text.contains("expected_improvement"));
}
