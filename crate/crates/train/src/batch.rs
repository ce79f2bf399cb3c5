//! Class-balanced mini-batches and global batch normalization.

use rand::Rng;

use timbre_tensor::Tensor;

use crate::dataset::LoadedDataset;
use crate::{Result, TrainError};

/// One mini-batch: stacked excerpt spectrograms and their class indices.
#[derive(Debug, Clone)]
pub struct Batch {
    /// Shape `[batch, frames, bins]`.
    pub inputs: Tensor<f32>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Copy of sample `i` as a `[frames, bins]` tensor.
    pub fn sample(&self, i: usize) -> Tensor<f32> {
        let shape = self.inputs.shape();
        let (frames, bins) = (shape[1], shape[2]);
        let per = frames * bins;
        Tensor::from_vec(
            &[frames, bins],
            self.inputs.data()[i * per..(i + 1) * per].to_vec(),
        )
        .expect("sample shape")
    }
}

/// Draws `batch_size` excerpts with a uniform class distribution
/// (`batch_size / n_classes` per class) and shuffles their order.
pub fn sample_batch<R: Rng>(
    dataset: &LoadedDataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<Batch> {
    let n_classes = dataset.manifest.class_names.len();
    if n_classes == 0 || !batch_size.is_multiple_of(n_classes) {
        return Err(TrainError::Config(format!(
            "batch size {batch_size} is not divisible by {n_classes} classes"
        )));
    }
    let per_class = batch_size / n_classes;
    let mut samples: Vec<(Tensor<f32>, usize)> = Vec::with_capacity(batch_size);
    for class in 0..n_classes {
        for _ in 0..per_class {
            samples.push((dataset.sample_excerpt(class, rng)?, class));
        }
    }
    // Fisher-Yates shuffle for the in-batch ordering.
    for i in (1..samples.len()).rev() {
        let j = rng.random_range(0..=i);
        samples.swap(i, j);
    }

    let shape = samples[0].0.shape().to_vec();
    let per = shape[0] * shape[1];
    let mut inputs = Vec::with_capacity(batch_size * per);
    let mut labels = Vec::with_capacity(batch_size);
    for (tensor, label) in samples {
        inputs.extend_from_slice(tensor.data());
        labels.push(label);
    }
    Ok(Batch {
        inputs: Tensor::from_vec(&[batch_size, shape[0], shape[1]], inputs)?,
        labels,
    })
}

/// Normalizes the whole batch to zero mean and unit variance with one
/// scalar mean and one scalar deviation over all values.
pub fn normalize_batch(batch: &mut Batch) -> Result<(f64, f64)> {
    let data = batch.inputs.data();
    let n = data.len() as f64;
    let mean = data.iter().map(|&v| v as f64).sum::<f64>() / n;
    let variance = data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    if variance == 0.0 {
        return Err(TrainError::DegenerateBatch { step: 0 });
    }
    let std = variance.sqrt();
    let (m, s) = (mean as f32, std as f32);
    for v in batch.inputs.data_mut() {
        *v = (*v - m) / s;
    }
    Ok((mean, std))
}
