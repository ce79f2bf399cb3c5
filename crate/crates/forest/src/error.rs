use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForestError {
    #[error("feature vector has {got} values, expected {expected}")]
    FeatureDim { expected: usize, got: usize },

    #[error("training needs at least two classes, got {0}")]
    SingleClass(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model i/o failed: {0}")]
    Io(String),

    #[error(transparent)]
    Dsp(#[from] timbre_dsp::DspError),
}
