//! The 70-dimensional excerpt summary: means and deviations of the
//! spectral shape descriptors, mean and deviation of the zero-crossing
//! rate, and the means of 20 MFCC with their first and second derivative.

use timbre_dsp::mel::mfcc;
use timbre_dsp::{detect_silence, spectral_descriptors, AudioBuffer, DEFAULT_SILENCE_DB};

use crate::{ForestError, Result};

pub const FEATURE_DIM: usize = 70;
const N_MFCC: usize = 20;

/// Fixed-order excerpt summary; see [`feature_names`] for the slot layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector70 {
    pub values: Vec<f32>,
}

impl FeatureVector70 {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(ForestError::FeatureDim { expected: FEATURE_DIM, got: values.len() });
        }
        Ok(FeatureVector70 { values })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Column names in slot order, used as the CSV header of feature tables.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for stat in ["centroid", "bandwidth", "skewness", "rolloff"] {
        names.push(format!("{stat}_mean"));
        names.push(format!("{stat}_std"));
    }
    names.push("zcr_mean".into());
    names.push("zcr_std".into());
    for prefix in ["mfcc", "dmfcc", "ddmfcc"] {
        for j in 1..=N_MFCC {
            names.push(format!("{prefix}{j:02}_mean"));
        }
    }
    names
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Centered regression delta over +/-2 frames with edge clamping.
fn deltas(frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = frames.len();
    let dim = frames.first().map_or(0, Vec::len);
    let clamp = |t: isize| frames[(t.clamp(0, n as isize - 1)) as usize].as_slice();
    (0..n as isize)
        .map(|t| {
            (0..dim)
                .map(|j| {
                    let mut acc = 0.0;
                    for d in 1..=2isize {
                        acc += d as f64 * (clamp(t + d)[j] - clamp(t - d)[j]);
                    }
                    acc / 10.0 // 2 * (1^2 + 2^2)
                })
                .collect()
        })
        .collect()
}

/// Bag-of-features over one excerpt of at least three seconds. A fully
/// silent excerpt collapses to the all-zero vector; the caller decides how
/// loudly to warn.
pub fn bag_of_features(audio: &AudioBuffer) -> Result<FeatureVector70> {
    let min_samples = 3 * audio.sample_rate as usize;
    if audio.samples.len() < min_samples {
        return Err(ForestError::InvalidInput(format!(
            "excerpt of {} samples is shorter than three seconds",
            audio.samples.len()
        )));
    }
    let silence = detect_silence(audio, DEFAULT_SILENCE_DB);
    if silence.iter().all(|&s| s) {
        return Ok(FeatureVector70 { values: vec![0.0; FEATURE_DIM] });
    }

    let descriptors = spectral_descriptors(audio);
    let mfcc_frames: Vec<Vec<f64>> = mfcc(audio, N_MFCC)?
        .into_iter()
        .map(|f| f.coefficients)
        .collect();
    let d1 = deltas(&mfcc_frames);
    let d2 = deltas(&d1);

    let mut values = Vec::with_capacity(FEATURE_DIM);
    for pick in [
        |d: &timbre_dsp::FrameDescriptors| d.centroid_hz,
        |d: &timbre_dsp::FrameDescriptors| d.bandwidth_hz,
        |d: &timbre_dsp::FrameDescriptors| d.skewness,
        |d: &timbre_dsp::FrameDescriptors| d.rolloff_hz,
    ] {
        let (mean, std) = mean_std(descriptors.iter().map(pick));
        values.push(mean as f32);
        values.push(std as f32);
    }
    let (zcr_mean, zcr_std) = mean_std(descriptors.iter().map(|d| d.zcr));
    values.push(zcr_mean as f32);
    values.push(zcr_std as f32);

    for series in [&mfcc_frames, &d1, &d2] {
        for j in 0..N_MFCC {
            let (mean, _) = mean_std(series.iter().map(|f| f[j]));
            values.push(mean as f32);
        }
    }
    FeatureVector70::new(values)
}

/// Feature table as CSV: a `label` column followed by the 70 named slots.
pub fn features_csv(rows: &[(String, FeatureVector70)]) -> String {
    let mut out = String::from("label,");
    out.push_str(&feature_names().join(","));
    out.push('\n');
    for (label, features) in rows {
        out.push_str(label);
        for v in &features.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use timbre_dsp::SAMPLE_RATE;

    fn sine(freq: f64, seconds: f64) -> AudioBuffer {
        let len = (seconds * SAMPLE_RATE as f64) as usize;
        let samples = (0..len)
            .map(|i| {
                (std::f64::consts::TAU * freq * i as f64 / SAMPLE_RATE as f64).sin() as f32 * 0.5
            })
            .collect();
        AudioBuffer::new(samples, SAMPLE_RATE)
    }

    #[test]
    fn vector_has_exactly_70_named_slots() {
        let names = feature_names();
        assert_eq!(names.len(), FEATURE_DIM);
        let unique: std::collections::BTreeSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), FEATURE_DIM);
        let v = bag_of_features(&sine(440.0, 3.0)).unwrap();
        assert_eq!(v.values.len(), FEATURE_DIM);
        assert!(v.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn pure_tone_centroid_slots_match_the_sine() {
        let v = bag_of_features(&sine(1000.0, 3.0)).unwrap();
        let names = feature_names();
        let centroid_mean = v.values[names.iter().position(|n| n == "centroid_mean").unwrap()];
        let centroid_std = v.values[names.iter().position(|n| n == "centroid_std").unwrap()];
        assert!((centroid_mean - 1000.0).abs() < 25.0, "centroid {centroid_mean}");
        assert!(centroid_std < 5.0, "centroid std {centroid_std}");
    }

    #[test]
    fn time_reversal_preserves_order_invariant_statistics() {
        let audio = {
            // A tone with some amplitude modulation so frames differ.
            let len = 3 * SAMPLE_RATE as usize;
            let samples = (0..len)
                .map(|i| {
                    let t = i as f64 / SAMPLE_RATE as f64;
                    ((std::f64::consts::TAU * 523.25 * t).sin()
                        * (0.5 + 0.3 * (std::f64::consts::TAU * 1.5 * t).sin()))
                        as f32
                })
                .collect();
            AudioBuffer::new(samples, SAMPLE_RATE)
        };
        let mut reversed_samples = audio.samples.clone();
        reversed_samples.reverse();
        let reversed = AudioBuffer::new(reversed_samples, SAMPLE_RATE);

        let a = bag_of_features(&audio).unwrap();
        let b = bag_of_features(&reversed).unwrap();
        let names = feature_names();
        let close = |name: &str| {
            let i = names.iter().position(|n| n == name).unwrap();
            let (x, y) = (a.values[i], b.values[i]);
            assert!(
                (x - y).abs() <= 1e-4 * x.abs().max(1.0),
                "{name}: {x} vs {y}"
            );
        };
        close("centroid_mean");
        for j in 1..=N_MFCC {
            close(&format!("mfcc{j:02}_mean"));
        }
    }

    #[test]
    fn silent_excerpt_collapses_to_zero() {
        let silent = AudioBuffer::new(vec![0.0; 3 * SAMPLE_RATE as usize], SAMPLE_RATE);
        let v = bag_of_features(&silent).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn short_excerpts_are_rejected() {
        assert!(bag_of_features(&sine(440.0, 2.5)).is_err());
    }

    #[test]
    fn csv_header_has_71_columns() {
        let v = bag_of_features(&sine(440.0, 3.0)).unwrap();
        let csv = features_csv(&[("violin".into(), v)]);
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 71);
        assert!(header.starts_with("label,centroid_mean,centroid_std"));
    }
}
