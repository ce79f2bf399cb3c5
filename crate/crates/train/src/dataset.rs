//! In-memory spectrogram cache: every file's weighted constant-Q matrix is
//! computed once, and excerpt windows are sliced from it on demand with
//! the dynamic-range clip applied per window. Slicing a window of the
//! full-file transform matches transforming the window directly, without
//! edge effects.

use rand::Rng;

use timbre_dsp::cqt::{weighted_db, CqtTransform, DYNAMIC_RANGE_DB, EXCERPT_FRAMES, HOP, N_BINS};
use timbre_dsp::{detect_silence, load_audio, AudioBuffer, SAMPLE_RATE};
use timbre_tensor::Tensor;

use crate::manifest::DatasetManifest;
use crate::{Result, TrainError};

/// Samples advanced between evaluation windows (half of three seconds).
pub const EVAL_HOP_SAMPLES: usize = (3 * SAMPLE_RATE as usize) / 2;
/// Samples per excerpt window.
pub const EXCERPT_SAMPLES: usize = 3 * SAMPLE_RATE as usize;
/// A window is usable while fewer than half of its frames are silent.
pub const MAX_SILENT_FRACTION: f64 = 0.5;

struct FileCache {
    /// Weighted dB spectrogram of the whole file, not yet range-clipped.
    db: Tensor<f32>,
    /// Per-frame silence mask on the shared analysis grid.
    silence: Vec<bool>,
    n_samples: usize,
}

/// Manifest plus per-file spectrogram caches.
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    files: Vec<FileCache>,
}

impl LoadedDataset {
    /// Loads and transforms every referenced file.
    pub fn load(manifest: DatasetManifest, silence_db: f64) -> Result<Self> {
        let transform = CqtTransform::new();
        let mut files = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let audio = load_audio(&entry.path)?;
            files.push(Self::cache_buffer(&transform, &audio, silence_db)?);
        }
        Ok(LoadedDataset { manifest, files })
    }

    /// Builds the dataset from already-rendered audio, bypassing disk.
    pub fn from_buffers(
        manifest: DatasetManifest,
        buffers: &[AudioBuffer],
        silence_db: f64,
    ) -> Result<Self> {
        if buffers.len() != manifest.entries.len() {
            return Err(TrainError::Manifest(format!(
                "{} buffers for {} manifest entries",
                buffers.len(),
                manifest.entries.len()
            )));
        }
        let transform = CqtTransform::new();
        let files = buffers
            .iter()
            .map(|audio| Self::cache_buffer(&transform, audio, silence_db))
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadedDataset { manifest, files })
    }

    fn cache_buffer(
        transform: &CqtTransform,
        audio: &AudioBuffer,
        silence_db: f64,
    ) -> Result<FileCache> {
        let spec = transform.full(audio)?;
        Ok(FileCache {
            db: weighted_db(&spec).values,
            silence: detect_silence(audio, silence_db),
            n_samples: audio.samples.len(),
        })
    }

    pub fn frames_of(&self, file: usize) -> usize {
        self.files[file].db.shape()[0]
    }

    /// Silent-frame fraction of the 128-frame window starting at `frame`.
    pub fn silent_fraction(&self, file: usize, frame: usize) -> f64 {
        let mask = &self.files[file].silence;
        if mask.is_empty() {
            return 1.0;
        }
        let hi = (frame + EXCERPT_FRAMES).min(mask.len());
        let lo = frame.min(hi);
        let window = &mask[lo..hi];
        if window.is_empty() {
            return 1.0;
        }
        window.iter().filter(|&&s| s).count() as f64 / window.len() as f64
    }

    /// Extracts the 128x96 excerpt at `frame`, applying the 80 dB
    /// dynamic-range clip relative to the window's own maximum.
    pub fn window(&self, file: usize, frame: usize) -> Tensor<f32> {
        let db = &self.files[file].db;
        let start = frame * N_BINS;
        let slice = &db.data()[start..start + EXCERPT_FRAMES * N_BINS];
        let max = slice.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let floor = max - DYNAMIC_RANGE_DB;
        let values = slice.iter().map(|&v| v.max(floor)).collect();
        Tensor::from_vec(&[EXCERPT_FRAMES, N_BINS], values).expect("window shape")
    }

    /// Valid training-window start frames for one file.
    fn window_starts(&self, file: usize) -> Option<usize> {
        let frames = self.frames_of(file);
        (frames >= EXCERPT_FRAMES).then(|| frames - EXCERPT_FRAMES)
    }

    /// Uniformly random non-silent 3-second excerpt from the train split
    /// of `class`, as a weighted, clipped spectrogram window.
    pub fn sample_excerpt<R: Rng>(&self, class: usize, rng: &mut R) -> Result<Tensor<f32>> {
        let class_name = &self.manifest.class_names[class];
        let candidates: Vec<usize> = self
            .manifest
            .train_indices()
            .into_iter()
            .filter(|&i| self.manifest.entries[i].label == *class_name)
            .filter(|&i| self.window_starts(i).is_some())
            .collect();
        if candidates.is_empty() {
            return Err(TrainError::ClassExhausted { class: class_name.clone() });
        }
        for _ in 0..128 {
            let file = candidates[rng.random_range(0..candidates.len())];
            let max_start = self.window_starts(file).unwrap();
            let frame = rng.random_range(0..=max_start);
            if self.silent_fraction(file, frame) < MAX_SILENT_FRACTION {
                return Ok(self.window(file, frame));
            }
        }
        // Random probing failed; fall back to scanning for any usable
        // window so sparse files cannot stall training.
        for &file in &candidates {
            let max_start = self.window_starts(file).unwrap();
            for frame in 0..=max_start {
                if self.silent_fraction(file, frame) < MAX_SILENT_FRACTION {
                    return Ok(self.window(file, frame));
                }
            }
        }
        Err(TrainError::ClassExhausted { class: class_name.clone() })
    }

    /// Evaluation windows for one file: 3-second spans every 1.5 seconds,
    /// with silent-majority windows dropped. Returns window start frames.
    pub fn eval_windows(&self, file: usize) -> Vec<usize> {
        let n = self.files[file].n_samples;
        if n < EXCERPT_SAMPLES {
            return Vec::new();
        }
        let frames = self.frames_of(file);
        let mut out = Vec::new();
        let mut start = 0usize;
        while start + EXCERPT_SAMPLES <= n {
            let frame = (((start as f64) / HOP as f64).round() as usize)
                .min(frames.saturating_sub(EXCERPT_FRAMES));
            if self.silent_fraction(file, frame) < MAX_SILENT_FRACTION {
                out.push(frame);
            }
            start += EVAL_HOP_SAMPLES;
        }
        out
    }
}
