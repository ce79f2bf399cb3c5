//! Audio ingestion: any supported WAV becomes a mono 44.1 kHz buffer.

use std::path::Path;

use crate::resample::resample;
use crate::wav::read_wav;
use crate::{Result, SAMPLE_RATE};

/// Mono audio at the pipeline sample rate, nominal range [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        AudioBuffer { samples, sample_rate }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }
}

/// Loads a WAV file, averages the channels down to mono, and resamples to
/// 44.1 kHz.
pub fn load_audio(path: &Path) -> Result<AudioBuffer> {
    let wav = read_wav(path)?;
    let mono: Vec<f32> = if wav.channels == 1 {
        wav.interleaved
    } else {
        wav.interleaved
            .chunks_exact(wav.channels as usize)
            .map(|frame| frame.iter().sum::<f32>() / wav.channels as f32)
            .collect()
    };
    let samples = if wav.sample_rate == SAMPLE_RATE {
        mono
    } else {
        resample(&mono, wav.sample_rate, SAMPLE_RATE)
    };
    Ok(AudioBuffer::new(samples, SAMPLE_RATE))
}
