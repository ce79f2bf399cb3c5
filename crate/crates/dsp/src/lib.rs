//! Signal-level frontend: WAV ingestion with windowed-sinc resampling, the
//! 96-bin constant-Q spectrogram with perceptual loudness weighting, mel /
//! MFCC machinery, spectral shape descriptors, silence detection, MFCC
//! cluster distances, and the synthetic source-filter tone generator used
//! as desk-scale ground truth.

pub mod audio;
pub mod cqt;
pub mod distances;
mod error;
pub mod features;
pub mod io;
pub mod mel;
pub mod resample;
pub mod silence;
pub mod synth;
pub mod wav;

pub use audio::{load_audio, AudioBuffer};
pub use cqt::{
    a_weighting_db, bin_frequency, clip_dynamic_range, perceptual_weighting, weighted_db,
    CqtTransform, Spectrogram,
};
pub use distances::{cluster_distances, ClusterDistances, DistanceSummary};
pub use error::DspError;
pub use features::{spectral_descriptors, FrameDescriptors, FRAME_LEN, HOP};
pub use mel::{mfcc, MfccVector};
pub use silence::{detect_silence, DEFAULT_SILENCE_DB};
pub use synth::{instrument_class, synth_tone, Envelope, InstrumentClass, SynthSpec};

pub type Result<T> = std::result::Result<T, DspError>;

/// Everything downstream assumes this rate; ingestion resamples to it.
pub const SAMPLE_RATE: u32 = 44_100;
