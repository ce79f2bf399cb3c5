//! Frame-level silence detection relative to the file's peak frame RMS.

use crate::audio::AudioBuffer;
use crate::features::frame_ranges;

/// Default threshold: 60 dB under the loudest frame.
pub const DEFAULT_SILENCE_DB: f64 = -60.0;

/// One flag per analysis frame: silent iff the frame RMS is at or below
/// `peak_rms * 10^(threshold_db / 20)`. An all-zero file is all silent.
pub fn detect_silence(audio: &AudioBuffer, threshold_db: f64) -> Vec<bool> {
    let ranges = frame_ranges(audio.samples.len());
    let rms: Vec<f64> = ranges
        .iter()
        .map(|r| {
            let frame = &audio.samples[r.clone()];
            let sum: f64 = frame.iter().map(|&s| (s as f64) * (s as f64)).sum();
            (sum / frame.len() as f64).sqrt()
        })
        .collect();
    let peak = rms.iter().copied().fold(0.0, f64::max);
    let threshold = peak * 10f64.powf(threshold_db / 20.0);
    rms.into_iter().map(|v| v <= threshold).collect()
}
