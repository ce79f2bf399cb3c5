use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("ingestion failed at byte {offset}: {reason}")]
    Ingest { offset: u64, reason: String },

    #[error("unsupported codec at byte {offset}: {what}")]
    UnsupportedCodec { offset: u64, what: String },

    #[error("input too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Tensor(#[from] timbre_tensor::TensorError),
}
