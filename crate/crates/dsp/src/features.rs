//! Frame-level analysis: the shared 2048/1024 framing grid, spectral shape
//! descriptors (centroid, bandwidth, skewness, rolloff) and zero-crossing
//! rate.

use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;

/// Analysis frame length in samples.
pub const FRAME_LEN: usize = 2048;
/// Analysis hop in samples.
pub const HOP: usize = 1024;
/// Fraction of spectral energy below the rolloff frequency.
pub const ROLLOFF_FRACTION: f64 = 0.85;

/// Full 2048-sample windows on the hop grid, center-trimmed to a hop
/// multiple so that reversing a signal reverses its frame set.
pub fn frame_ranges(len: usize) -> Vec<Range<usize>> {
    if len < FRAME_LEN {
        return Vec::new();
    }
    let rem = len % HOP;
    let lo = rem / 2;
    let effective = len - rem;
    let n = (effective - FRAME_LEN) / HOP + 1;
    (0..n).map(|i| lo + i * HOP..lo + i * HOP + FRAME_LEN).collect()
}

// Symmetric form: w[i] == w[n-1-i], so a reversed frame has exactly the
// mirrored windowed content and an identical magnitude spectrum.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Spectral shape of one frame; all zeros for an all-zero frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameDescriptors {
    pub centroid_hz: f64,
    pub bandwidth_hz: f64,
    pub skewness: f64,
    pub rolloff_hz: f64,
    /// Zero crossings per second.
    pub zcr: f64,
}

/// Per-frame descriptors over the shared framing grid: moments of the
/// normalized magnitude spectrum, the 85% energy rolloff, and the
/// time-domain zero-crossing rate.
pub fn spectral_descriptors(audio: &AudioBuffer) -> Vec<FrameDescriptors> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(FRAME_LEN);
    let window = hann(FRAME_LEN);
    let n_bins = FRAME_LEN / 2 + 1;
    let hz_per_bin = audio.sample_rate as f64 / FRAME_LEN as f64;
    let frame_seconds = FRAME_LEN as f64 / audio.sample_rate as f64;

    let mut out = Vec::new();
    let mut buf = vec![Complex::new(0.0f64, 0.0f64); FRAME_LEN];
    for range in frame_ranges(audio.samples.len()) {
        let frame = &audio.samples[range];
        if frame.iter().all(|&s| s == 0.0) {
            out.push(FrameDescriptors::default());
            continue;
        }
        for ((slot, &s), w) in buf.iter_mut().zip(frame).zip(&window) {
            *slot = Complex::new(s as f64 * w, 0.0);
        }
        fft.process(&mut buf);
        let mags: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm()).collect();
        let total: f64 = mags.iter().sum();
        if total <= 0.0 {
            out.push(FrameDescriptors::default());
            continue;
        }

        let centroid: f64 = mags
            .iter()
            .enumerate()
            .map(|(i, &m)| i as f64 * hz_per_bin * m)
            .sum::<f64>()
            / total;
        let variance: f64 = mags
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let d = i as f64 * hz_per_bin - centroid;
                d * d * m
            })
            .sum::<f64>()
            / total;
        let bandwidth = variance.sqrt();
        let skewness = if bandwidth > 0.0 {
            mags.iter()
                .enumerate()
                .map(|(i, &m)| {
                    let d = i as f64 * hz_per_bin - centroid;
                    d * d * d * m
                })
                .sum::<f64>()
                / total
                / bandwidth.powi(3)
        } else {
            0.0
        };

        let energy_total: f64 = mags.iter().map(|m| m * m).sum();
        let mut cum = 0.0;
        let mut rolloff = (n_bins - 1) as f64 * hz_per_bin;
        for (i, &m) in mags.iter().enumerate() {
            cum += m * m;
            if cum >= ROLLOFF_FRACTION * energy_total {
                rolloff = i as f64 * hz_per_bin;
                break;
            }
        }

        let crossings = frame
            .windows(2)
            .filter(|pair| (pair[0] as f64) * (pair[1] as f64) < 0.0)
            .count();
        let zcr = crossings as f64 / frame_seconds;

        out.push(FrameDescriptors {
            centroid_hz: centroid,
            bandwidth_hz: bandwidth,
            skewness,
            rolloff_hz: rolloff,
            zcr,
        });
    }
    out
}
