//! Spectrogram persistence: raw little-endian `f32` values next to a JSON
//! sidecar describing shape, bin frequencies, and hop.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use timbre_tensor::Tensor;

use crate::cqt::Spectrogram;
use crate::{DspError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    shape: Vec<usize>,
    bin_freqs: Vec<f64>,
    hop_seconds: f64,
}

/// Writes `<base>.f32` (row-major little-endian values) and `<base>.json`.
pub fn save_spectrogram(base: &Path, spec: &Spectrogram) -> Result<()> {
    let mut bytes = Vec::with_capacity(spec.values.numel() * 4);
    for &v in spec.values.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let sidecar = Sidecar {
        shape: spec.values.shape().to_vec(),
        bin_freqs: spec.bin_freqs.clone(),
        hop_seconds: spec.hop_seconds,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| DspError::Io(e.to_string()))?;
    fs::write(base.with_extension("f32"), bytes)
        .map_err(|e| DspError::Io(format!("{}: {e}", base.display())))?;
    fs::write(base.with_extension("json"), json)
        .map_err(|e| DspError::Io(format!("{}: {e}", base.display())))?;
    Ok(())
}

pub fn load_spectrogram(base: &Path) -> Result<Spectrogram> {
    let json = fs::read_to_string(base.with_extension("json"))
        .map_err(|e| DspError::Io(format!("{}: {e}", base.display())))?;
    let sidecar: Sidecar =
        serde_json::from_str(&json).map_err(|e| DspError::Io(e.to_string()))?;
    let bytes = fs::read(base.with_extension("f32"))
        .map_err(|e| DspError::Io(format!("{}: {e}", base.display())))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Spectrogram {
        values: Tensor::from_vec(&sidecar.shape, values)?,
        bin_freqs: sidecar.bin_freqs,
        hop_seconds: sidecar.hop_seconds,
    })
}
