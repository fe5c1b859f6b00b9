//! Mini-batch Adam training with per-epoch validation metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, DatasetId};
use crate::error::{Error, Result};
use crate::model::{HybridModel, ModelKind, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.first_moment, &self.second_moment)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n || grads.len() != n {
            return Err(Error::Shape(format!(
                "optimizer tracks {n} parameters, got {} params and {} grads",
                params.len(),
                grads.len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..n {
            let g = grads[i];
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub dataset: DatasetId,
    pub model: ModelKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 16,
            lr: 0.05,
            seed: 0,
            dataset: DatasetId::Synthetic,
            model: ModelKind::CombinedQnnCnn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<MetricsRecord>,
    pub params: ModelParams,
}

/// Trains `model` on an already scaled and split dataset. The same config
/// always yields the same history.
pub fn train(model: &HybridModel, train_set: &Dataset, validation: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train_set, validation, config, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with<F>(
    model: &HybridModel,
    train_set: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&MetricsRecord),
{
    if config.epochs == 0 {
        return Err(Error::Argument("epochs must be at least 1".into()));
    }
    if config.batch_size == 0 || config.batch_size > train_set.len() {
        return Err(Error::Argument(format!(
            "batch size must be in 1..={}, got {}",
            train_set.len(),
            config.batch_size
        )));
    }
    if model.kind() != config.model {
        return Err(Error::Argument(format!(
            "config names {} but the model is {}",
            config.model,
            model.kind()
        )));
    }

    let mut params = model.init_params(config.seed);
    let mut flat = params.to_flat();
    let mut adam = AdamState::new(flat.len(), config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let grads = batch
                .par_iter()
                .map(|&i| model.grad_all(&params, &train_set.features()[i], train_set.targets()[i]))
                .collect::<Result<Vec<_>>>()?;
            // fixed-order reduction
            let mut sum = vec![0.0; flat.len()];
            for g in &grads {
                for (s, v) in sum.iter_mut().zip(g.to_flat()) {
                    *s += v;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            sum.iter_mut().for_each(|s| *s *= scale);
            if let Some(bad) = sum.iter().find(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    msg: format!("non-finite gradient component {bad}"),
                });
            }
            adam.step(&mut flat, &sum)?;
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    msg: "parameters became non-finite".into(),
                });
            }
            params.set_flat(&flat)?;
        }
        let eval = model.evaluate(&params, validation)?;
        if !eval.loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                msg: format!("validation loss is {}", eval.loss),
            });
        }
        let record = MetricsRecord {
            epoch,
            val_loss: eval.loss,
            val_accuracy: eval.accuracy,
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok(TrainOutcome { history, params })
}

/// Minimum loss and maximum accuracy, each taken over all epochs.
pub fn best_metrics(history: &[MetricsRecord]) -> Result<(f64, f64)> {
    if history.is_empty() {
        return Err(Error::Argument("empty metrics history".into()));
    }
    let loss = history.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    let acc = history.iter().map(|r| r.val_accuracy).fold(f64::NEG_INFINITY, f64::max);
    Ok((loss, acc))
}
