//! Mel filterbank and MFCC extraction: 40 triangular bands from 0 Hz to
//! Nyquist, log energies, orthonormal DCT-II, and the lowest nonzero
//! quefrencies as coefficients (the DC term is dropped).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::features::{frame_ranges, hann, FRAME_LEN};
use crate::silence::{detect_silence, DEFAULT_SILENCE_DB};
use crate::{DspError, Result};

/// Number of mel bands in the filterbank.
pub const N_MELS: usize = 40;

const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// One MFCC frame: coefficient `j` is DCT quefrency `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccVector {
    pub coefficients: Vec<f64>,
}

/// Triangular filterbank rows over the `FRAME_LEN/2 + 1` spectrum bins,
/// bands equally spaced on the mel scale from 0 Hz to Nyquist.
pub fn mel_filterbank(sample_rate: u32) -> Vec<Vec<f64>> {
    let n_bins = FRAME_LEN / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..N_MELS + 2)
        .map(|j| mel_to_hz(j as f64 * mel_max / (N_MELS + 1) as f64))
        .collect();
    let hz_per_bin = sample_rate as f64 / FRAME_LEN as f64;
    (0..N_MELS)
        .map(|b| {
            let (lo, center, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..n_bins)
                .map(|i| {
                    let f = i as f64 * hz_per_bin;
                    let rising = (f - lo) / (center - lo);
                    let falling = (hi - f) / (hi - center);
                    rising.min(falling).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II matrix of size `n`: `M * M^T = I`.
pub fn dct_ii_orthonormal(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let norm = if j == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            (0..n)
                .map(|m| {
                    norm * (std::f64::consts::PI / n as f64 * (m as f64 + 0.5) * j as f64).cos()
                })
                .collect()
        })
        .collect()
}

/// Per-frame MFCC: power spectrum, 40-band mel energies, log, orthonormal
/// DCT-II, coefficients 1..=n_keep. `n_keep` is 12 for the invariance
/// study and 20 for the bag-of-features baseline.
pub fn mfcc(audio: &AudioBuffer, n_keep: usize) -> Result<Vec<MfccVector>> {
    if n_keep != 12 && n_keep != 20 {
        return Err(DspError::InvalidParam {
            name: "n_keep",
            reason: format!("pipeline uses 12 or 20 coefficients, got {n_keep}"),
        });
    }
    Ok(mfcc_frames(audio, n_keep))
}

fn mfcc_frames(audio: &AudioBuffer, n_keep: usize) -> Vec<MfccVector> {
    let filterbank = mel_filterbank(audio.sample_rate);
    let dct = dct_ii_orthonormal(N_MELS);
    let window = hann(FRAME_LEN);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(FRAME_LEN);
    let n_bins = FRAME_LEN / 2 + 1;

    let mut out = Vec::new();
    let mut buf = vec![Complex::new(0.0f64, 0.0f64); FRAME_LEN];
    for range in frame_ranges(audio.samples.len()) {
        let frame = &audio.samples[range];
        for ((slot, &s), w) in buf.iter_mut().zip(frame).zip(&window) {
            *slot = Complex::new(s as f64 * w, 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm_sqr()).collect();
        let log_mel: Vec<f64> = filterbank
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
                (e + LOG_FLOOR).ln()
            })
            .collect();
        let coefficients = (1..=n_keep)
            .map(|j| dct[j].iter().zip(&log_mel).map(|(c, e)| c * e).sum())
            .collect();
        out.push(MfccVector { coefficients });
    }
    out
}

/// One vector per recording: the mean MFCC over non-silent frames (over
/// all frames when everything is silent).
pub fn mfcc_note_summary(audio: &AudioBuffer, n_keep: usize) -> Result<Vec<f64>> {
    let frames = mfcc(audio, n_keep)?;
    if frames.is_empty() {
        return Err(DspError::TooShort { needed: FRAME_LEN, got: audio.samples.len() });
    }
    let mask = detect_silence(audio, DEFAULT_SILENCE_DB);
    let selected: Vec<&MfccVector> = frames
        .iter()
        .zip(mask.iter().chain(std::iter::repeat(&false)))
        .filter_map(|(f, &silent)| (!silent).then_some(f))
        .collect();
    let pool: Vec<&MfccVector> = if selected.is_empty() {
        frames.iter().collect()
    } else {
        selected
    };
    let mut mean = vec![0.0f64; n_keep];
    for f in &pool {
        for (m, c) in mean.iter_mut().zip(&f.coefficients) {
            *m += c;
        }
    }
    for m in &mut mean {
        *m /= pool.len() as f64;
    }
    Ok(mean)
}
