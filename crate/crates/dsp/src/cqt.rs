//! Constant-Q spectrogram: 96 bins at 12 per octave from A1 (55 Hz) to
//! just under A9, hop 1024 samples (~23.2 ms), per-bin Hann-windowed
//! complex kernels applied through one FFT per frame block. Perceptual
//! loudness weighting maps magnitudes to A-weighted decibels with an 80 dB
//! dynamic-range clip.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use timbre_tensor::Tensor;

use crate::audio::AudioBuffer;
use crate::{DspError, Result, SAMPLE_RATE};

/// Frequency bins per octave.
pub const BINS_PER_OCTAVE: usize = 12;
/// Total frequency bins (eight octaves).
pub const N_BINS: usize = 96;
/// Analysis hop in samples (~23.2 ms at 44.1 kHz).
pub const HOP: usize = 1024;
/// Frames in a three-second excerpt.
pub const EXCERPT_FRAMES: usize = 128;

const N_FFT: usize = 16_384;
const KERNEL_SPARSITY: f64 = 1e-5;

/// Center frequency of bin `k`: 55 Hz times 2^(k/12).
pub fn bin_frequency(k: usize) -> f64 {
    55.0 * (k as f64 / BINS_PER_OCTAVE as f64).exp2()
}

/// Quality factor shared by all kernels: one semitone of bandwidth.
pub fn quality_factor() -> f64 {
    1.0 / ((1.0f64 / 12.0).exp2() - 1.0)
}

/// Time-frequency magnitude matrix `[frames, bins]` with its bin
/// frequencies and hop. Values are linear magnitudes out of the transform
/// and weighted decibels after [`perceptual_weighting`].
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub values: Tensor<f32>,
    pub bin_freqs: Vec<f64>,
    pub hop_seconds: f64,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn bins(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn at(&self, frame: usize, bin: usize) -> f32 {
        self.values.data()[frame * self.bins() + bin]
    }
}

struct SparseKernel {
    /// (fft bin, conj(kernel spectrum) / n_fft) pairs above the sparsity
    /// threshold; the frame transform is one sparse dot per CQT bin.
    entries: Vec<(u32, Complex<f32>)>,
}

/// Precomputed transform for 44.1 kHz input.
pub struct CqtTransform {
    fft: Arc<dyn Fft<f32>>,
    kernels: Vec<SparseKernel>,
    bin_freqs: Vec<f64>,
    max_kernel_len: usize,
}

impl Default for CqtTransform {
    fn default() -> Self {
        Self::new()
    }
}

impl CqtTransform {
    pub fn new() -> Self {
        let sr = SAMPLE_RATE as f64;
        let q = quality_factor();
        let mut planner = FftPlanner::<f32>::new();
        let fft = planner.plan_fft_forward(N_FFT);

        let mut kernels = Vec::with_capacity(N_BINS);
        let mut bin_freqs = Vec::with_capacity(N_BINS);
        let mut max_kernel_len = 0usize;
        let mut buf = vec![Complex::new(0.0f32, 0.0f32); N_FFT];
        for k in 0..N_BINS {
            let freq = bin_frequency(k);
            bin_freqs.push(freq);
            let len = ((q * sr / freq).round() as usize).clamp(2, N_FFT);
            max_kernel_len = max_kernel_len.max(len);

            // Hann-windowed complex exponential, centered in the block and
            // normalized so a unit sinusoid at the bin center reads ~1.
            let mut window_sum = 0.0f64;
            let mut time_kernel = vec![Complex::new(0.0f64, 0.0f64); len];
            for (i, slot) in time_kernel.iter_mut().enumerate() {
                let w = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / len as f64).cos();
                window_sum += w;
                let t = i as f64 - (len as f64 - 1.0) / 2.0;
                let phase = -std::f64::consts::TAU * freq * t / sr;
                *slot = Complex::new(w * phase.cos(), w * phase.sin());
            }
            let norm = 2.0 / window_sum;

            buf.fill(Complex::new(0.0, 0.0));
            let start = N_FFT / 2 - len / 2;
            for (i, v) in time_kernel.iter().enumerate() {
                buf[start + i] = Complex::new((v.re * norm) as f32, (v.im * norm) as f32);
            }
            fft.process(&mut buf);

            let peak = buf.iter().map(|c| c.norm() as f64).fold(0.0, f64::max);
            let threshold = (peak * KERNEL_SPARSITY) as f32;
            let entries = buf
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() > threshold)
                .map(|(i, c)| (i as u32, c.conj() / N_FFT as f32))
                .collect();
            kernels.push(SparseKernel { entries });
        }
        CqtTransform { fft, kernels, bin_freqs, max_kernel_len }
    }

    /// Shortest admissible input: the A1 kernel must fit.
    pub fn min_samples(&self) -> usize {
        self.max_kernel_len
    }

    /// Magnitude spectrogram over the whole buffer, one frame per hop.
    pub fn full(&self, audio: &AudioBuffer) -> Result<Spectrogram> {
        if audio.sample_rate != SAMPLE_RATE {
            return Err(DspError::InvalidParam {
                name: "sample_rate",
                reason: format!("expected {SAMPLE_RATE}, got {}", audio.sample_rate),
            });
        }
        let len = audio.samples.len();
        if len < self.max_kernel_len {
            return Err(DspError::TooShort { needed: self.max_kernel_len, got: len });
        }
        let n_frames = len.div_ceil(HOP);
        let mut values = vec![0.0f32; n_frames * N_BINS];
        let mut buf = vec![Complex::new(0.0f32, 0.0f32); N_FFT];
        let mut scratch = vec![Complex::new(0.0f32, 0.0f32); self.fft.get_inplace_scratch_len()];

        for frame in 0..n_frames {
            let center = (frame * HOP) as isize;
            let lo = center - (N_FFT / 2) as isize;
            buf.fill(Complex::new(0.0, 0.0));
            let src_lo = lo.max(0) as usize;
            let src_hi = ((lo + N_FFT as isize) as usize).min(len);
            for (dst, &s) in buf[(src_lo as isize - lo) as usize..]
                .iter_mut()
                .zip(&audio.samples[src_lo..src_hi])
            {
                dst.re = s;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);

            let row = &mut values[frame * N_BINS..(frame + 1) * N_BINS];
            for (bin, kernel) in self.kernels.iter().enumerate() {
                let mut acc = Complex::new(0.0f32, 0.0f32);
                for &(idx, coeff) in &kernel.entries {
                    acc += buf[idx as usize] * coeff;
                }
                row[bin] = acc.norm();
            }
        }
        Ok(Spectrogram {
            values: Tensor::from_vec(&[n_frames, N_BINS], values)?,
            bin_freqs: self.bin_freqs.clone(),
            hop_seconds: HOP as f64 / SAMPLE_RATE as f64,
        })
    }

    /// Spectrogram of an excerpt, center-cropped or zero-padded to exactly
    /// 128 frames; a three-second buffer lands on 128x96.
    pub fn excerpt(&self, audio: &AudioBuffer) -> Result<Spectrogram> {
        let full = self.full(audio)?;
        Ok(crop_frames(&full, EXCERPT_FRAMES))
    }
}

/// Center-crops or zero-pads a spectrogram to `target` frames.
pub fn crop_frames(spec: &Spectrogram, target: usize) -> Spectrogram {
    let frames = spec.frames();
    let bins = spec.bins();
    let mut values = vec![0.0f32; target * bins];
    if frames >= target {
        let start = (frames - target) / 2;
        values.copy_from_slice(&spec.values.data()[start * bins..(start + target) * bins]);
    } else {
        let offset = (target - frames) / 2;
        values[offset * bins..(offset + frames) * bins].copy_from_slice(spec.values.data());
    }
    Spectrogram {
        values: Tensor::from_vec(&[target, bins], values).expect("crop shape"),
        bin_freqs: spec.bin_freqs.clone(),
        hop_seconds: spec.hop_seconds,
    }
}

/// Standard A-weighting curve in dB, zero at 1 kHz.
pub fn a_weighting_db(freq: f64) -> f64 {
    let f2 = freq * freq;
    let ra = (12194.0f64.powi(2) * f2 * f2)
        / ((f2 + 20.6f64.powi(2))
            * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
            * (f2 + 12194.0f64.powi(2)));
    20.0 * ra.log10() + 2.0
}

const POWER_FLOOR: f64 = 1e-10;

/// Dynamic range kept under the spectrogram maximum after weighting.
pub const DYNAMIC_RANGE_DB: f32 = 80.0;

/// A-weighted power in dB with a -100 dB floor, before any range clip.
pub fn weighted_db(spec: &Spectrogram) -> Spectrogram {
    let bins = spec.bins();
    let gains: Vec<f64> = spec
        .bin_freqs
        .iter()
        .map(|&f| 10f64.powf(a_weighting_db(f) / 10.0))
        .collect();
    let values: Vec<f32> = spec
        .values
        .data()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let power = (m as f64) * (m as f64) * gains[i % bins];
            (10.0 * (power + POWER_FLOOR).log10()) as f32
        })
        .collect();
    Spectrogram {
        values: Tensor::from_vec(spec.values.shape(), values).expect("weighting shape"),
        bin_freqs: spec.bin_freqs.clone(),
        hop_seconds: spec.hop_seconds,
    }
}

/// Clamps every value into `[max - range_db, max]`.
pub fn clip_dynamic_range(spec: &Spectrogram, range_db: f32) -> Spectrogram {
    let max = spec.values.data().iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let floor = max - range_db;
    Spectrogram {
        values: spec.values.map(|v| v.max(floor)),
        bin_freqs: spec.bin_freqs.clone(),
        hop_seconds: spec.hop_seconds,
    }
}

/// Loudness weighting: per-bin A-weighted power in dB with a floor of
/// -100 dB, clipped to the top 80 dB of the spectrogram. Same-frequency
/// power ratios are preserved exactly; silence maps to a uniform floor.
pub fn perceptual_weighting(spec: &Spectrogram) -> Spectrogram {
    clip_dynamic_range(&weighted_db(spec), DYNAMIC_RANGE_DB)
}
