//! Action-recognition protocols on generated videos: motion features, a
//! linear classifier, and the real/synthetic training experiments.

pub mod classifier;
pub mod error;
pub mod experiment;
pub mod features;
pub mod pool;
pub mod protocol;
pub mod toy;

pub use error::{EvalError, Result};
pub use experiment::{Baseline, Experiment, ExperimentRegistry, ExperimentResult, SeedResult, ShotCurve};
pub use protocol::{ExperimentConfig, Sample, Split};
