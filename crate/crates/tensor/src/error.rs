use thiserror::Error;

/// Errors raised by tensor construction and the layer operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("dimension mismatch on axis `{axis}`: expected {expected}, got {got}")]
    DimMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape {shape:?} implies {expected} elements, data has {got}")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArg { name: &'static str, reason: String },

    #[error("index {index} out of range for axis of extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("non-finite value encountered in `{context}`")]
    NonFinite { context: &'static str },

    #[error("backward called before a forward pass was recorded")]
    BackwardBeforeForward,

    #[error("checkpoint i/o failed: {0}")]
    CheckpointIo(String),

    #[error("malformed checkpoint: {0}")]
    CheckpointFormat(String),
}
