use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("dataset error: class `{class}` has no usable training audio")]
    ClassExhausted { class: String },

    #[error("degenerate batch: zero variance at step {step}")]
    DegenerateBatch { step: usize },

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Dsp(#[from] timbre_dsp::DspError),

    #[error(transparent)]
    Net(#[from] timbre_net::NetError),

    #[error(transparent)]
    Tensor(#[from] timbre_tensor::TensorError),
}
