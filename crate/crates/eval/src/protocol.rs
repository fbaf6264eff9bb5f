//! Training/test splits and seeded sampling shared by every experiment.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reenact_core::dataset::mix_seed;
use serde::{Deserialize, Serialize};

use crate::classifier::{evaluate, train_classifier, TrainConfig};
use crate::error::{EvalError, Result};
use crate::features::FeatureVector;
use crate::pool::{FeatureStore, VideoPool};

const REAL_STREAM: usize = 1;
const SYNTHETIC_STREAM: usize = 2;

fn default_curve_steps() -> Vec<usize> {
    vec![0, 50, 100, 150, 200]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Real training videos per class.
    pub n_real: usize,
    /// Synthetic training videos per class.
    pub n_background: usize,
    /// Real test videos per class.
    pub n_test: usize,
    pub classes: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_curve_steps")]
    pub curve_steps: Vec<usize>,
    /// Identities of the real pool reserved for testing.
    pub test_identities: Vec<String>,
    #[serde(default)]
    pub training: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_test == 0 {
            return Err(EvalError::config("n_test", "must be at least 1"));
        }
        if self.classes.is_empty() {
            return Err(EvalError::config("classes", "need at least one class"));
        }
        if self.classes.iter().collect::<HashSet<_>>().len() != self.classes.len() {
            return Err(EvalError::config("classes", "duplicate class label"));
        }
        if self.seeds.is_empty() {
            return Err(EvalError::config("seeds", "need at least one seed"));
        }
        if self.curve_steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::config("curve_steps", "must be strictly increasing"));
        }
        if self.test_identities.is_empty() {
            return Err(EvalError::config("test_identities", "need at least one held-out identity"));
        }
        if !(self.training.lr > 0.0 && self.training.l2 >= 0.0) {
            return Err(EvalError::config("training", "lr must be positive and l2 non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub video_id: String,
    pub identity_id: String,
    pub label: usize,
    pub features: FeatureVector,
}

/// Real training, synthetic training and real test samples, grouped by class
/// index and sorted by video id within each class.
#[derive(Debug, Clone)]
pub struct Split {
    pub classes: Vec<String>,
    pub real: Vec<Vec<Sample>>,
    pub synthetic: Vec<Vec<Sample>>,
    pub test: Vec<Sample>,
}

fn by_class(pool: &VideoPool, classes: &[String], store: &FeatureStore, keep: impl Fn(&str) -> bool) -> Result<Vec<Vec<Sample>>> {
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let mut out = vec![Vec::new(); classes.len()];
    for v in pool.videos() {
        let Some(&label) = index.get(v.entry.class_label.as_str()) else {
            continue;
        };
        if !keep(&v.entry.identity_id) {
            continue;
        }
        out[label].push(Sample {
            video_id: v.entry.video_id.clone(),
            identity_id: v.entry.identity_id.clone(),
            label,
            features: store.get(&v.entry.video_id)?.clone(),
        });
    }
    Ok(out)
}

impl Split {
    /// Real videos of test identities form the test pool (first `n_test` per
    /// class by id); the remaining real videos and all synthetic ones train.
    pub fn new(config: &ExperimentConfig, real: &VideoPool, synthetic: &VideoPool, store: &FeatureStore) -> Result<Self> {
        config.validate()?;
        let held_out: HashSet<&str> = config.test_identities.iter().map(String::as_str).collect();
        let classes = config.classes.clone();
        let real_train = by_class(real, &classes, store, |id| !held_out.contains(id))?;
        let test_pool = by_class(real, &classes, store, |id| held_out.contains(id))?;
        let synthetic = by_class(synthetic, &classes, store, |_| true)?;
        let mut test = Vec::new();
        for (c, mut videos) in test_pool.into_iter().enumerate() {
            if videos.len() < config.n_test {
                return Err(EvalError::InsufficientPool {
                    pool: "test",
                    class: classes[c].clone(),
                    needed: config.n_test,
                    available: videos.len(),
                });
            }
            videos.truncate(config.n_test);
            test.extend(videos);
        }
        let split = Self {
            classes,
            real: real_train,
            synthetic,
            test,
        };
        split.check_hygiene()?;
        Ok(split)
    }

    /// No test video or test identity may reach a training set.
    pub fn check_hygiene(&self) -> Result<()> {
        let test_ids: HashSet<&str> = self.test.iter().map(|s| s.video_id.as_str()).collect();
        let test_people: HashSet<&str> = self.test.iter().map(|s| s.identity_id.as_str()).collect();
        for s in self.real.iter().chain(&self.synthetic).flatten() {
            if test_ids.contains(s.video_id.as_str()) {
                return Err(EvalError::SplitLeak(format!("video `{}` is in train and test", s.video_id)));
            }
            if test_people.contains(s.identity_id.as_str()) {
                return Err(EvalError::SplitLeak(format!(
                    "identity `{}` is in train and test (video `{}`)",
                    s.identity_id, s.video_id
                )));
            }
        }
        Ok(())
    }

    pub fn require(&self, n_real: usize, n_synthetic: usize) -> Result<()> {
        for (c, class) in self.classes.iter().enumerate() {
            for (pool, have, needed) in [("real", self.real[c].len(), n_real), ("synthetic", self.synthetic[c].len(), n_synthetic)] {
                if have < needed {
                    return Err(EvalError::InsufficientPool {
                        pool,
                        class: class.clone(),
                        needed,
                        available: have,
                    });
                }
            }
        }
        Ok(())
    }

    /// `n` real videos per class drawn uniformly without replacement.
    pub fn real_sample(&self, seed: u64, n: usize) -> Vec<&Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, REAL_STREAM, 0));
        let mut out = Vec::new();
        for class in &self.real {
            let mut picks = index::sample(&mut rng, class.len(), n.min(class.len())).into_vec();
            picks.sort_unstable();
            out.extend(picks.into_iter().map(|k| &class[k]));
        }
        out
    }

    /// The first `n` entries of one seeded permutation per class, so larger
    /// draws extend smaller ones.
    pub fn synthetic_sample(&self, seed: u64, n: usize) -> Vec<&Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, SYNTHETIC_STREAM, 0));
        let mut out = Vec::new();
        for class in &self.synthetic {
            let order = index::sample(&mut rng, class.len(), class.len()).into_vec();
            out.extend(order.into_iter().take(n).map(|k| &class[k]));
        }
        out
    }

    /// Trains on `train` and scores on the test pool.
    pub fn train_and_test(&self, train: &[&Sample], training: &TrainConfig, seed: u64) -> Result<f64> {
        let samples: Vec<(&FeatureVector, usize)> = train.iter().map(|s| (&s.features, s.label)).collect();
        let model = train_classifier(&samples, self.classes.len(), training, seed)?;
        let test: Vec<(&FeatureVector, usize)> = self.test.iter().map(|s| (&s.features, s.label)).collect();
        evaluate(&model, &test)
    }
}
