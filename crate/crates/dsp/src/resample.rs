//! Windowed-sinc sample-rate conversion, evaluated directly at each
//! fractional source position. Quality over speed: resampling happens once
//! per file at load time.

const HALF_TAPS: usize = 32;

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = x * std::f64::consts::PI;
        px.sin() / px
    }
}

/// Resamples `input` from `src_rate` to `dst_rate`. The anti-aliasing
/// cutoff tracks the lower of the two Nyquist frequencies.
pub fn resample(input: &[f32], src_rate: u32, dst_rate: u32) -> Vec<f32> {
    if src_rate == dst_rate || input.is_empty() {
        return input.to_vec();
    }
    let ratio = src_rate as f64 / dst_rate as f64;
    // Normalized cutoff in cycles per source sample, slightly inside the
    // band edge to leave the window transition room.
    let cutoff = 0.475 * (dst_rate as f64 / src_rate as f64).min(1.0);
    let out_len = (input.len() as f64 / ratio).ceil() as usize;
    let mut out = Vec::with_capacity(out_len);
    let n = input.len() as isize;

    for i in 0..out_len {
        let pos = i as f64 * ratio;
        let center = pos.floor() as isize;
        let mut acc = 0.0f64;
        for j in (center - HALF_TAPS as isize + 1)..=(center + HALF_TAPS as isize) {
            if j < 0 || j >= n {
                continue;
            }
            let d = pos - j as f64;
            // Hann window over the tap span.
            let w = 0.5 + 0.5 * (std::f64::consts::PI * d / HALF_TAPS as f64).cos();
            acc += input[j as usize] as f64 * 2.0 * cutoff * sinc(2.0 * cutoff * d) * w;
        }
        out.push(acc as f32);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize) -> Vec<f32> {
        (0..len)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / rate as f64).sin() as f32)
            .collect()
    }

    /// Magnitude of the DFT at one exact bin; the test oracle.
    fn dft_mag(signal: &[f32], bin: usize) -> f64 {
        let n = signal.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &s) in signal.iter().enumerate() {
            let phase = std::f64::consts::TAU * bin as f64 * i as f64 / n;
            re += s as f64 * phase.cos();
            im -= s as f64 * phase.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn identity_rate_is_passthrough() {
        let x = sine(440.0, 44_100, 1000);
        assert_eq!(resample(&x, 44_100, 44_100), x);
    }

    #[test]
    fn upsampled_sine_keeps_its_frequency() {
        // 1 kHz at 22.05 kHz, one second, doubled to 44.1 kHz.
        let x = sine(1000.0, 22_050, 22_050);
        let y = resample(&x, 22_050, 44_100);
        assert_eq!(y.len(), 44_100);
        // Dominant bin of the 44100-point DFT should be 1000 +/- 1.
        let mut best = (0usize, 0.0f64);
        for bin in 900..1100 {
            let m = dft_mag(&y, bin);
            if m > best.1 {
                best = (bin, m);
            }
        }
        assert!((best.0 as i64 - 1000).abs() <= 1, "peak at {} Hz", best.0);
    }

    #[test]
    fn downsampling_preserves_in_band_content() {
        let x = sine(1000.0, 48_000, 48_000);
        let y = resample(&x, 48_000, 44_100);
        assert_eq!(y.len(), 44_100);
        let mut best = (0usize, 0.0f64);
        for bin in 900..1100 {
            let m = dft_mag(&y, bin);
            if m > best.1 {
                best = (bin, m);
            }
        }
        assert!((best.0 as i64 - 1000).abs() <= 1, "peak at {} Hz", best.0);
        // Amplitude roughly preserved.
        let peak = y.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.05, "peak {peak}");
    }
}
