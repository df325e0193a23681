//! Mini-batch Adam training loop with a deterministic reduction order.

use ndarray::Array3;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::loss_and_logit_grad;
use super::model::CnnModel;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamDomain};

/// Per-sample gradients are summed in fixed runs of this many samples, in
/// index order, so the result is bit-identical however the runs themselves
/// are scheduled.
const REDUCTION_CHUNK: usize = 16;

/// Supplies one sample's CNN input and label. The epoch index lets a source
/// redraw observation noise every epoch; epoch 0 is also what validation
/// always sees.
pub trait FeatureSource: Sync {
    fn n_records(&self) -> usize;
    fn features(&self, epoch: usize, record: usize) -> Result<Array3<f64>>;
    fn label(&self, record: usize) -> &[f64];
}

/// Fixed tensors, identical across epochs. Used by tests and by callers that
/// precompute their features.
pub struct InMemorySource {
    pub features: Vec<Array3<f64>>,
    pub labels: Vec<Vec<f64>>,
}

impl FeatureSource for InMemorySource {
    fn n_records(&self) -> usize {
        self.features.len()
    }

    fn features(&self, _epoch: usize, record: usize) -> Result<Array3<f64>> {
        Ok(self.features[record].clone())
    }

    fn label(&self, record: usize) -> &[f64] {
        &self.labels[record]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Fraction of records used for training; the rest validate.
    pub train_fraction: f64,
    /// Reuse epoch-0 features for every epoch instead of redrawing noise.
    pub cache_features: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            train_fraction: 0.8,
            cache_features: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1], got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when no validation split exists.
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest validation loss (training
    /// loss when there is no validation split).
    pub best_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

fn sample_loss_and_grad(
    model: &CnnModel,
    params: &[f64],
    source: &dyn FeatureSource,
    epoch: usize,
    record: usize,
) -> Result<(f64, Vec<f64>)> {
    let input = source.features(epoch, record)?;
    let cache = model.forward_cached(params, &input)?;
    let (loss, d_logits) = loss_and_logit_grad(model.config.head, &cache.logits, source.label(record));
    let grad = model.backward(params, &cache, &d_logits);
    Ok((loss, grad))
}

/// Mean loss and argmax accuracy over `indices`, with features drawn at the
/// given epoch.
pub fn evaluate(
    model: &CnnModel,
    params: &[f64],
    source: &dyn FeatureSource,
    indices: &[usize],
    epoch: usize,
) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let results: Vec<(f64, bool)> = indices
        .par_iter()
        .map(|&record| -> Result<(f64, bool)> {
            let input = source.features(epoch, record)?;
            let cache = model.forward_cached(params, &input)?;
            let label = source.label(record);
            let (loss, _) = loss_and_logit_grad(model.config.head, &cache.logits, label);
            let hit = argmax(&cache.logits) == argmax(label);
            Ok((loss, hit))
        })
        .collect::<Result<Vec<_>>>()?;
    let loss = results.iter().map(|(l, _)| l).sum::<f64>() / indices.len() as f64;
    let acc = results.iter().filter(|(_, h)| *h).count() as f64 / indices.len() as f64;
    Ok((loss, acc))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Deterministic train/validation partition for an `n`-record dataset under
/// this training config. `train` uses it internally; callers that evaluate a
/// finished model against the held-out slice recompute the same split here.
pub fn split_indices(n: usize, cfg: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(cfg.seed, StreamDomain::Split, 0));
    let n_train = ((cfg.train_fraction * n as f64).round() as usize).clamp(1, n);
    let val = order.split_off(n_train);
    (order, val)
}

/// Splits, shuffles, and trains; returns both the best-validation and final
/// parameters plus the per-epoch history.
pub fn train(model: &CnnModel, source: &dyn FeatureSource, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = source.n_records();
    if n == 0 {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let (train_indices, val_indices) = split_indices(n, cfg);

    let mut params = model.init_params(cfg.seed);
    let mut adam = Adam::new(model.n_params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_params = params.clone();
    let mut best_metric = f64::INFINITY;
    let mut best_epoch = 0usize;

    for epoch in 0..cfg.epochs {
        let feature_epoch = if cfg.cache_features { 0 } else { epoch };
        let mut epoch_order = train_indices.clone();
        epoch_order.shuffle(&mut stream(cfg.seed, StreamDomain::Shuffle, epoch as u64));

        let mut epoch_loss = 0.0;
        for batch in epoch_order.chunks(cfg.batch_size) {
            let mut grad_sum = vec![0.0; model.n_params()];
            let mut loss_sum = 0.0;
            for chunk in batch.chunks(REDUCTION_CHUNK) {
                let partials: Vec<(f64, Vec<f64>)> = chunk
                    .par_iter()
                    .map(|&record| sample_loss_and_grad(model, &params, source, feature_epoch, record))
                    .collect::<Result<Vec<_>>>()?;
                for (loss, grad) in &partials {
                    loss_sum += loss;
                    for (acc, g) in grad_sum.iter_mut().zip(grad) {
                        *acc += g;
                    }
                }
            }
            if !loss_sum.is_finite() {
                return Err(Error::Numerical(format!(
                    "training diverged at epoch {epoch}: non-finite batch loss"
                )));
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grad_sum.iter_mut() {
                *g *= scale;
            }
            adam.step(&mut params, &grad_sum);
            epoch_loss += loss_sum;
        }
        let train_loss = epoch_loss / train_indices.len() as f64;
        let (val_loss, val_accuracy) = evaluate(model, &params, source, &val_indices, 0)?;
        history.push(EpochStats { epoch, train_loss, val_loss, val_accuracy });

        let metric = if val_indices.is_empty() { train_loss } else { val_loss };
        if metric < best_metric {
            best_metric = metric;
            best_params = params.clone();
            best_epoch = epoch;
        }
    }
    Ok(TrainOutcome {
        best_params,
        final_params: params,
        best_epoch,
        history,
        train_indices,
        val_indices,
    })
}
