//! The training protocol: on-the-fly non-silent excerpt sampling,
//! class-balanced mini-batches with global normalization, the Adam loop
//! with epoch-level early stopping, checkpointing, and evaluation over
//! half-overlapping three-second excerpts.

pub mod batch;
pub mod dataset;
mod error;
pub mod eval;
pub mod manifest;
pub mod trainer;

pub use batch::{normalize_batch, sample_batch, Batch};
pub use dataset::LoadedDataset;
pub use error::TrainError;
pub use eval::{evaluate, repeated_trials, AccuracyReport, ClassAccuracy, TrialsReport};
pub use manifest::{DatasetManifest, ManifestEntry, Split};
pub use trainer::{should_stop, train, TrainConfig, TrainOutcome};

pub type Result<T> = std::result::Result<T, TrainError>;
