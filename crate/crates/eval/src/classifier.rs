//! Multinomial logistic regression trained by full-batch gradient descent.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::features::FeatureVector;

/// Losses may rise by at most this much before the step size is halved.
pub const LOSS_SLACK: f64 = 1e-12;
pub const MAX_LR_REDUCTIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Per-dimension standardization fitted on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Zero-variance dimensions get a unit std.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(features: &[&FeatureVector]) -> Self {
        let d = features[0].len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; d];
        for f in features {
            for (m, v) in mean.iter_mut().zip(&f.values) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for f in features {
            for ((s, v), m) in var.iter_mut().zip(&f.values).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let std = var
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Design matrix: standardized features plus a trailing bias column of ones.
pub fn design_matrix(features: &[&FeatureVector], scaler: &Scaler) -> Result<DMatrix<f64>> {
    let d = scaler.dim();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(EvalError::Dimension {
            expected: d,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(features.len(), d + 1, |r, c| {
        if c == d {
            1.0
        } else {
            (features[r].values[c] - scaler.mean[c]) / scaler.std[c]
        }
    }))
}

/// Row-wise softmax of `x wᵀ`.
fn probabilities(w: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = x * w.transpose();
    for mut row in p.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Mean cross-entropy plus `l2/2 ‖W‖²` over the non-bias weights, and its
/// gradient with respect to `w` (`C x (D+1)`).
pub fn loss_and_gradient(w: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[usize], l2: f64) -> (f64, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let bias = w.ncols() - 1;
    let mut p = probabilities(w, x);
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        loss -= p[(r, y)].max(f64::MIN_POSITIVE).ln();
        p[(r, y)] -= 1.0;
    }
    loss /= n;
    let mut grad = p.transpose() * x / n;
    let mut penalty = 0.0;
    for c in 0..w.nrows() {
        for d in 0..bias {
            penalty += w[(c, d)] * w[(c, d)];
            grad[(c, d)] += l2 * w[(c, d)];
        }
    }
    (loss + 0.5 * l2 * penalty, grad)
}

fn loss_only(w: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[usize], l2: f64) -> f64 {
    loss_and_gradient(w, x, labels, l2).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub weights: DMatrix<f64>,
    pub scaler: Scaler,
    /// Loss after each accepted epoch, starting with the initial loss.
    pub loss_history: Vec<f64>,
}

impl ClassifierModel {
    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn scores(&self, feature: &FeatureVector) -> Result<DVector<f64>> {
        let x = design_matrix(&[feature], &self.scaler)?;
        Ok((x * self.weights.transpose()).row(0).transpose())
    }

    /// Argmax class; ties go to the lowest index.
    pub fn predict(&self, feature: &FeatureVector) -> Result<usize> {
        Ok(argmax(self.scores(feature)?.as_slice()))
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

/// Fits a `num_classes`-way model on `(feature, label)` pairs; `seed` drives
/// the weight initialization.
pub fn train_classifier(
    samples: &[(&FeatureVector, usize)],
    num_classes: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<ClassifierModel> {
    if samples.is_empty() {
        return Err(EvalError::InvalidArgument("empty training set".into()));
    }
    if num_classes == 0 {
        return Err(EvalError::InvalidArgument("need at least one class".into()));
    }
    if let Some(&(_, bad)) = samples.iter().find(|s| s.1 >= num_classes) {
        return Err(EvalError::InvalidArgument(format!("label {bad} out of range for {num_classes} classes")));
    }
    if !(config.lr > 0.0 && config.l2 >= 0.0) {
        return Err(EvalError::InvalidArgument("lr must be positive and l2 non-negative".into()));
    }
    let features: Vec<&FeatureVector> = samples.iter().map(|s| s.0).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.1).collect();
    let scaler = Scaler::fit(&features);
    let x = design_matrix(&features, &scaler)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::from_fn(num_classes, x.ncols(), |_, _| rng.gen_range(-0.01..0.01));
    let mut lr = config.lr;
    let mut reductions = 0;
    let (mut loss, mut grad) = loss_and_gradient(&w, &x, &labels, config.l2);
    let mut history = vec![loss];
    let mut epoch = 0;
    while epoch < config.epochs {
        let candidate = &w - &grad * lr;
        let (next_loss, next_grad) = loss_and_gradient(&candidate, &x, &labels, config.l2);
        if next_loss > loss + LOSS_SLACK {
            if reductions == MAX_LR_REDUCTIONS {
                log::debug!("training stopped at epoch {epoch}: loss rose after {MAX_LR_REDUCTIONS} step reductions");
                break;
            }
            reductions += 1;
            lr *= 0.5;
            continue;
        }
        w = candidate;
        loss = next_loss;
        grad = next_grad;
        history.push(loss);
        epoch += 1;
    }
    debug_assert_eq!(loss, loss_only(&w, &x, &labels, config.l2));
    Ok(ClassifierModel {
        weights: w,
        scaler,
        loss_history: history,
    })
}

/// Fraction of argmax-correct predictions.
pub fn evaluate(model: &ClassifierModel, test: &[(&FeatureVector, usize)]) -> Result<f64> {
    if test.is_empty() {
        return Err(EvalError::InvalidArgument("empty test set".into()));
    }
    let features: Vec<&FeatureVector> = test.iter().map(|s| s.0).collect();
    let x = design_matrix(&features, &model.scaler)?;
    let scores = x * model.weights.transpose();
    let correct = test
        .iter()
        .enumerate()
        .filter(|(r, s)| {
            let row: Vec<f64> = scores.row(*r).iter().copied().collect();
            argmax(&row) == s.1
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}
