//! The Adam training loop: epochs of class-balanced normalized batches,
//! dropout on the flattened features and the hidden activations, and
//! early stopping at the first epoch whose mean loss stops decreasing.
//!
//! Everything is reproducible from the seed. The random stream is used in
//! a fixed order: network initialization, then per step the batch draw
//! followed by one dropout seed per sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use timbre_net::{LayerSpec, Network, NetworkSpec};
use timbre_tensor::ops::cross_entropy;
use timbre_tensor::{AdamConfig, AdamState, Checkpoint, Tensor};

use crate::batch::{normalize_batch, sample_batch};
use crate::dataset::LoadedDataset;
use crate::{Result, TrainError};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Samples per epoch.
    pub epoch_size: usize,
    pub batch_size: usize,
    /// Dropout rate applied to the flattened features and hidden units.
    pub dropout: f64,
    /// Leaky rectifier slope.
    pub alpha: f64,
    pub seed: u64,
    /// Safety cap on epochs; the stopping rule usually fires first.
    pub max_epochs: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epoch_size: 8192,
            batch_size: 32,
            dropout: 0.5,
            alpha: 0.3,
            seed: 0,
            max_epochs: 100,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !self.epoch_size.is_multiple_of(self.batch_size) {
            return Err(TrainError::Config(format!(
                "epoch size {} must be a positive multiple of batch size {}",
                self.epoch_size, self.batch_size
            )));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Mean loss of every optimizer step, in order.
    pub step_losses: Vec<f64>,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    /// Loss history as `epoch,mean_loss` CSV.
    pub fn loss_history_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss\n");
        for (i, loss) in self.epoch_losses.iter().enumerate() {
            out.push_str(&format!("{},{loss}\n", i + 1));
        }
        out
    }
}

/// Stop at the first epoch whose mean loss failed to decrease.
pub fn should_stop(epoch_losses: &[f64]) -> bool {
    let n = epoch_losses.len();
    n >= 2 && epoch_losses[n - 1] >= epoch_losses[n - 2]
}

/// Applies the protocol's dropout rate and rectifier slope to a spec.
fn apply_config(spec: &NetworkSpec, config: &TrainConfig) -> NetworkSpec {
    let mut spec = spec.clone();
    let adjust = |layers: &mut Vec<LayerSpec>| {
        for layer in layers {
            match layer {
                LayerSpec::Dropout { rate } => *rate = config.dropout,
                LayerSpec::Relu { alpha } => *alpha = config.alpha,
                _ => {}
            }
        }
    };
    for branch in &mut spec.branches {
        adjust(&mut branch.layers);
    }
    adjust(&mut spec.head);
    spec
}

/// Trains `spec` on the dataset's train split. Returns the checkpoint and
/// the loss history; fully deterministic for a fixed seed.
pub fn train(
    spec: &NetworkSpec,
    dataset: &LoadedDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.manifest.validate_for_training()?;
    let spec = apply_config(spec, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::<f32>::init(&spec, &mut rng)?;
    let mut adam = {
        let params = net.params();
        AdamState::new(
            &params.iter().map(|p| (*p).clone()).collect::<Vec<_>>(),
            config.adam,
        )
    };

    let steps_per_epoch = config.epoch_size / config.batch_size;
    let mut step_losses = Vec::new();
    let mut epoch_losses = Vec::new();
    let mut stopped_early = false;
    let mut step = 0usize;

    'epochs: for _epoch in 0..config.max_epochs {
        let mut epoch_sum = 0.0f64;
        for _ in 0..steps_per_epoch {
            let mut batch = sample_batch(dataset, config.batch_size, &mut rng)?;
            normalize_batch(&mut batch).map_err(|e| match e {
                TrainError::DegenerateBatch { .. } => TrainError::DegenerateBatch { step },
                other => other,
            })?;
            let dropout_seeds: Vec<u64> =
                (0..batch.len()).map(|_| rng.random::<u64>()).collect();

            let mut grad_sum: Option<Vec<Tensor<f32>>> = None;
            let mut loss_sum = 0.0f64;
            for (i, &dropout_seed) in dropout_seeds.iter().enumerate() {
                let input = batch.sample(i);
                let mut sample_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
                let (probs, tape) = net.forward_train(&input, &mut sample_rng)?;
                let loss = cross_entropy(&probs, batch.labels[i])? as f64;
                loss_sum += loss;
                let grads = net.backward(tape, batch.labels[i])?;
                match &mut grad_sum {
                    None => grad_sum = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            a.add_assign(g)?;
                        }
                    }
                }
            }
            let mean_loss = loss_sum / batch.len() as f64;
            if !mean_loss.is_finite() {
                return Err(TrainError::Diverged { step, loss: mean_loss });
            }
            let mut grads = grad_sum.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f32;
            for g in &mut grads {
                g.scale(scale);
            }
            adam.step_refs(&mut net.params_mut(), &grads)?;

            step_losses.push(mean_loss);
            epoch_sum += mean_loss;
            step += 1;
        }
        epoch_losses.push(epoch_sum / steps_per_epoch as f64);
        if should_stop(&epoch_losses) {
            stopped_early = true;
            break 'epochs;
        }
    }

    let mut metadata = serde_json::Map::new();
    metadata.insert("seed".into(), json!(config.seed));
    metadata.insert("epoch_size".into(), json!(config.epoch_size));
    metadata.insert("batch_size".into(), json!(config.batch_size));
    metadata.insert("dropout".into(), json!(config.dropout));
    metadata.insert("alpha".into(), json!(config.alpha));
    metadata.insert("learning_rate".into(), json!(config.adam.learning_rate));
    metadata.insert(
        "class_names".into(),
        json!(dataset.manifest.class_names),
    );
    metadata.insert("epoch_losses".into(), json!(epoch_losses));
    metadata.insert("stopped_early".into(), json!(stopped_early));

    Ok(TrainOutcome {
        checkpoint: net.to_checkpoint(metadata),
        step_losses,
        epochs_run: epoch_losses.len(),
        epoch_losses,
        stopped_early,
    })
}
