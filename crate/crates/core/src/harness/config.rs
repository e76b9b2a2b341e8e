use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveConfig;
use crate::error::{Error, Result};
use crate::search::SearchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Penalized UCB with online κ/λ adaptation.
    #[serde(alias = "adaptive")]
    AdaptiveGp,
    /// UCB with κ fixed at `kappa_init`.
    #[serde(alias = "ucb", alias = "gp_ucb")]
    FixedUcb,
    #[serde(alias = "ei", alias = "gp_ei")]
    ExpectedImprovement,
    #[serde(alias = "random")]
    RandomSearch,
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::AdaptiveGp => "adaptive_gp",
            StrategyKind::FixedUcb => "fixed_ucb",
            StrategyKind::ExpectedImprovement => "expected_improvement",
            StrategyKind::RandomSearch => "random_search",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::InvalidInput(format!("unknown strategy '{name}'")))
    }

    pub fn uses_model(&self) -> bool {
        !matches!(self, StrategyKind::RandomSearch)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single experimental cell: one function, dimension, noise level and
/// strategy, repeated over `n_trials` seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub function: String,
    pub dim: usize,
    pub noise_std: f64,
    pub strategy: StrategyKind,
    pub kappa_init: f64,
    pub lambda_init: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub budget: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub n_init: usize,
    pub refit_every: usize,
    pub n_global: usize,
    pub n_refine: usize,
    pub mc_samples: usize,
    pub grid_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            function: "rosenbrock".into(),
            dim: 2,
            noise_std: 0.01,
            strategy: StrategyKind::AdaptiveGp,
            kappa_init: 1.0,
            lambda_init: 0.01,
            beta: 0.1,
            gamma: 0.05,
            eta: 0.1,
            budget: 100,
            n_trials: 30,
            base_seed: 0,
            n_init: 5,
            refit_every: 10,
            n_global: 1000,
            n_refine: 5,
            mc_samples: 1000,
            grid_bins: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.n_init == 0 || self.budget <= self.n_init {
            return fail("budget must exceed n_init and n_init must be >= 1");
        }
        if self.n_trials == 0 {
            return fail("n_trials must be >= 1");
        }
        if self.dim == 0 {
            return fail("dim must be >= 1");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail("noise_std must be finite and >= 0");
        }
        if self.strategy.uses_model() && !(self.kappa_init >= 0.0) {
            return fail("kappa_init must be >= 0");
        }
        if self.strategy == StrategyKind::AdaptiveGp && !(self.kappa_init > 0.0) {
            return fail("kappa_init must be > 0 for the adaptive strategy");
        }
        if !(self.lambda_init >= 0.0) {
            return fail("lambda_init must be >= 0");
        }
        if self.refit_every == 0 || self.mc_samples == 0 || self.grid_bins == 0 {
            return fail("refit_every, mc_samples and grid_bins must be >= 1");
        }
        self.search().validate()?;
        if self.strategy == StrategyKind::AdaptiveGp {
            self.adaptive().validate()?;
        }
        Ok(())
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            n_global: self.n_global,
            n_refine: self.n_refine,
            ..SearchConfig::default()
        }
    }

    pub fn adaptive(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            beta: self.beta,
            gamma: self.gamma,
            eta: self.eta,
            ..AdaptiveConfig::default()
        }
    }

    /// Seed of trial `index`.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    /// File-name stem identifying this cell.
    pub fn tag(&self) -> String {
        format!(
            "{}_d{}_noise{}_{}_k{}_l{}",
            self.function, self.dim, self.noise_std, self.strategy, self.kappa_init, self.lambda_init
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// On-disk configuration. The grid keys (`function`, `dim`, `noise_std`,
/// `strategy`, `kappa_init`, `lambda_init`) accept a scalar or a list; the
/// Cartesian product is expanded by [`ConfigFile::expand`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub function: OneOrMany<String>,
    pub dim: OneOrMany<usize>,
    pub noise_std: OneOrMany<f64>,
    pub strategy: OneOrMany<StrategyKind>,
    #[serde(default = "defaults::kappa_init")]
    pub kappa_init: OneOrMany<f64>,
    #[serde(default = "defaults::lambda_init")]
    pub lambda_init: OneOrMany<f64>,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::budget")]
    pub budget: usize,
    #[serde(default = "defaults::n_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "defaults::n_init")]
    pub n_init: usize,
    #[serde(default = "defaults::refit_every")]
    pub refit_every: usize,
    #[serde(default = "defaults::n_global")]
    pub n_global: usize,
    #[serde(default = "defaults::n_refine")]
    pub n_refine: usize,
    #[serde(default = "defaults::mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "defaults::grid_bins")]
    pub grid_bins: usize,
}

mod defaults {
    use super::OneOrMany;

    pub fn kappa_init() -> OneOrMany<f64> {
        OneOrMany::One(1.0)
    }
    pub fn lambda_init() -> OneOrMany<f64> {
        OneOrMany::One(0.01)
    }
    pub fn beta() -> f64 {
        0.1
    }
    pub fn gamma() -> f64 {
        0.05
    }
    pub fn eta() -> f64 {
        0.1
    }
    pub fn budget() -> usize {
        100
    }
    pub fn n_trials() -> usize {
        30
    }
    pub fn n_init() -> usize {
        5
    }
    pub fn refit_every() -> usize {
        10
    }
    pub fn n_global() -> usize {
        1000
    }
    pub fn n_refine() -> usize {
        5
    }
    pub fn mc_samples() -> usize {
        1000
    }
    pub fn grid_bins() -> usize {
        10
    }
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    }

    /// Expands the grid into validated cells.
    ///
    /// Coefficients a strategy does not use are normalized to 0 (λ for
    /// fixed UCB, both for EI and random search) and the resulting
    /// duplicate cells are dropped.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let mut out: Vec<ExperimentConfig> = Vec::new();
        for function in self.function.values() {
            for dim in self.dim.values() {
                for noise_std in self.noise_std.values() {
                    for strategy in self.strategy.values() {
                        for kappa in self.kappa_init.values() {
                            for lambda in self.lambda_init.values() {
                                let (kappa_init, lambda_init) = match strategy {
                                    StrategyKind::AdaptiveGp => (kappa, lambda),
                                    StrategyKind::FixedUcb => (kappa, 0.0),
                                    _ => (0.0, 0.0),
                                };
                                let cfg = ExperimentConfig {
                                    function: function.clone(),
                                    dim,
                                    noise_std,
                                    strategy,
                                    kappa_init,
                                    lambda_init,
                                    beta: self.beta,
                                    gamma: self.gamma,
                                    eta: self.eta,
                                    budget: self.budget,
                                    n_trials: self.n_trials,
                                    base_seed: self.base_seed,
                                    n_init: self.n_init,
                                    refit_every: self.refit_every,
                                    n_global: self.n_global,
                                    n_refine: self.n_refine,
                                    mc_samples: self.mc_samples,
                                    grid_bins: self.grid_bins,
                                };
                                cfg.validate()?;
                                if !out.contains(&cfg) {
                                    out.push(cfg);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_and_lists() {
        let text = r#"{
            "function": "levy", "dim": [2, 5], "noise_std": 0.01,
            "strategy": ["adaptive_gp", "fixed_ucb", "random_search"],
            "kappa_init": [0.5, 1.0], "lambda_init": [0.001, 0.1],
            "budget": 20, "n_trials": 3
        }"#;
        let file: ConfigFile = serde_json::from_str(text).unwrap();
        let cells = file.expand().unwrap();
        // per dim: adaptive 2x2, ucb 2, random 1
        assert_eq!(cells.len(), 2 * (4 + 2 + 1));
        assert!(cells.iter().all(|c| c.budget == 20 && c.n_init == 5));
        let ucb: Vec<_> = cells.iter().filter(|c| c.strategy == StrategyKind::FixedUcb).collect();
        assert!(ucb.iter().all(|c| c.lambda_init == 0.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = r#"{"function": "levy", "dim": 2, "noise_std": 0.0, "strategy": "ei", "budgett": 3}"#;
        assert!(serde_json::from_str::<ConfigFile>(text).is_err());
        let text = r#"{"function": "levy", "dim": 2, "noise_std": 0.0, "strategy": "ei", "budget": 5}"#;
        let file: ConfigFile = serde_json::from_str(text).unwrap();
        assert!(file.expand().is_err());
    }

    #[test]
    fn strategy_names() {
        for s in [
            StrategyKind::AdaptiveGp,
            StrategyKind::FixedUcb,
            StrategyKind::ExpectedImprovement,
            StrategyKind::RandomSearch,
        ] {
            assert_eq!(StrategyKind::parse(s.name()).unwrap(), s);
        }
        assert_eq!(StrategyKind::parse("ei").unwrap(), StrategyKind::ExpectedImprovement);
        assert!(StrategyKind::parse("cma_es").is_err());
    }
}
