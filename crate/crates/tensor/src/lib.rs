//! Dense n-dimensional tensors with the forward operations and exact
//! reverse-mode gradients needed by the spectrogram classifiers, plus the
//! Adam optimizer, inverted dropout, and the checkpoint container format.
//!
//! Everything is generic over [`Scalar`]: training runs in `f32`, gradient
//! and oracle tests instantiate the same code in `f64`.

pub mod adam;
pub mod checkpoint;
mod error;
pub mod ops;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointHeader, ParamRecord};
pub use error::TensorError;
pub use ops::{ConvKernel, DenseWeights, SpiralKernel};
pub use tensor::{Scalar, Tensor};

pub type Result<T> = std::result::Result<T, TensorError>;
