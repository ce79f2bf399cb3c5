use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("layer {layer} ({kind}): {reason}")]
    LayerShape {
        layer: usize,
        kind: &'static str,
        reason: String,
    },

    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),

    #[error(transparent)]
    Tensor(#[from] timbre_tensor::TensorError),
}
