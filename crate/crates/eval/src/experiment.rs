use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::protocol::{ExperimentConfig, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracies: Vec<f64>,
}

/// Accuracies of one experiment: one row per seed, one column per training
/// configuration, with column-wise mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentResult {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub per_seed: Vec<SeedResult>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, config: ExperimentConfig, columns: Vec<String>, per_seed: Vec<SeedResult>) -> Self {
        let n = per_seed.len() as f64;
        let mean: Vec<f64> = (0..columns.len())
            .map(|c| per_seed.iter().map(|s| s.accuracies[c]).sum::<f64>() / n)
            .collect();
        let std = (0..columns.len())
            .map(|c| {
                if per_seed.len() < 2 {
                    return 0.0;
                }
                let ss: f64 = per_seed.iter().map(|s| (s.accuracies[c] - mean[c]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect();
        Self {
            experiment: experiment.into(),
            config,
            columns,
            per_seed,
            mean,
            std,
        }
    }

    /// Plain-text table: one row per column of the result, accuracies in percent.
    pub fn table(&self) -> String {
        let mut out = format!("{}\n", self.experiment);
        let width = self.columns.iter().map(String::len).max().unwrap_or(0).max(8);
        out.push_str(&format!(
            "{:<width$}  {:>14}  {}\n",
            "training",
            "accuracy (%)",
            self.per_seed.iter().map(|s| format!("{:>7}", format!("s{}", s.seed))).collect::<Vec<_>>().join(" ")
        ));
        out.push_str(&format!("{}\n", "-".repeat(width + 18 + 8 * self.per_seed.len())));
        for (c, name) in self.columns.iter().enumerate() {
            let runs: Vec<String> = self.per_seed.iter().map(|s| format!("{:>7.2}", 100.0 * s.accuracies[c])).collect();
            out.push_str(&format!(
                "{:<width$}  {:>6.2} ± {:<5.2}  {}\n",
                name,
                100.0 * self.mean[c],
                100.0 * self.std[c],
                runs.join(" ")
            ));
        }
        out
    }

    /// Writes `results.json` and `results.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, text))
                .map_err(|e| EvalError::Write {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
        };
        write("results.json", serde_json::to_string_pretty(self).expect("results always serialize"))?;
        write("results.txt", self.table())
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &str;

    /// The configuration actually run, after experiment-specific overrides.
    fn effective_config(&self, config: &ExperimentConfig) -> ExperimentConfig {
        config.clone()
    }

    fn run(&self, config: &ExperimentConfig, split: &Split) -> Result<ExperimentResult>;
}

/// Real-only against real plus `n_background` synthetic videos per class.
#[derive(Debug, Clone, Copy, Default)]
pub struct Baseline;

impl Experiment for Baseline {
    fn name(&self) -> &str {
        "baseline"
    }

    fn run(&self, config: &ExperimentConfig, split: &Split) -> Result<ExperimentResult> {
        config.validate()?;
        split.require(config.n_real, config.n_background)?;
        let per_seed = config
            .seeds
            .par_iter()
            .map(|&seed| {
                let real = split.real_sample(seed, config.n_real);
                let mut both = real.clone();
                both.extend(split.synthetic_sample(seed, config.n_background));
                let accuracies = [&real, &both]
                    .into_par_iter()
                    .map(|train| split.train_and_test(train, &config.training, seed))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SeedResult { seed, accuracies })
            })
            .collect::<Result<Vec<_>>>()?;
        let columns = vec!["real".to_string(), "real+synthetic".to_string()];
        Ok(ExperimentResult::new(self.name(), config.clone(), columns, per_seed))
    }
}

/// A fixed `n_real` sample per class with growing synthetic additions.
#[derive(Debug, Clone)]
pub struct ShotCurve {
    pub name: String,
    pub n_real: usize,
}

impl ShotCurve {
    pub fn new(name: impl Into<String>, n_real: usize) -> Self {
        Self {
            name: name.into(),
            n_real,
        }
    }
}

impl Experiment for ShotCurve {
    fn name(&self) -> &str {
        &self.name
    }

    fn effective_config(&self, config: &ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            n_real: self.n_real,
            ..config.clone()
        }
    }

    fn run(&self, config: &ExperimentConfig, split: &Split) -> Result<ExperimentResult> {
        let config = self.effective_config(config);
        config.validate()?;
        if config.curve_steps.is_empty() {
            return Err(EvalError::config("curve_steps", "need at least one step"));
        }
        let max_step = *config.curve_steps.last().expect("non-empty");
        split.require(config.n_real, max_step)?;
        let runs: Vec<(u64, usize)> = config
            .seeds
            .iter()
            .flat_map(|&s| config.curve_steps.iter().map(move |&n| (s, n)))
            .collect();
        let accuracies = runs
            .par_iter()
            .map(|&(seed, n)| {
                let mut train = split.real_sample(seed, config.n_real);
                train.extend(split.synthetic_sample(seed, n));
                split.train_and_test(&train, &config.training, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let per_seed = config
            .seeds
            .iter()
            .zip(accuracies.chunks(config.curve_steps.len()))
            .map(|(&seed, acc)| SeedResult {
                seed,
                accuracies: acc.to_vec(),
            })
            .collect();
        let columns = config.curve_steps.iter().map(|n| format!("n_background={n}")).collect();
        Ok(ExperimentResult::new(self.name(), config, columns, per_seed))
    }
}

/// Experiments addressable by name.
pub struct ExperimentRegistry {
    experiments: Vec<Box<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Baseline));
        r.register(Box::new(ShotCurve::new("one-shot", 1)));
        r.register(Box::new(ShotCurve::new("few-shot", 5)));
        r
    }
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { experiments: Vec::new() }
    }

    /// A later registration under an existing name replaces it.
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.experiments.retain(|e| e.name() != experiment.name());
        self.experiments.push(experiment);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.experiments.iter().find(|e| e.name() == name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.experiments.iter().map(|e| e.name()).collect()
    }
}
