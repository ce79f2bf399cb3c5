//! Minimal PCM WAV codec: 16/24-bit integer and 32-bit float, mono or
//! stereo. Parse errors carry the byte offset at which they were detected.

use std::fs;
use std::path::Path;

use crate::{DspError, Result};

/// Decoded WAV payload: interleaved samples normalized to [-1, 1].
#[derive(Debug, Clone)]
pub struct WavData {
    pub channels: u16,
    pub sample_rate: u32,
    pub interleaved: Vec<f32>,
}

/// Sample layout accepted by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Pcm24,
    Float32,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> DspError {
        DspError::Ingest { offset: self.pos as u64, reason: reason.into() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!(
                "truncated file: wanted {n} bytes, {} remain",
                self.bytes.len() - self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tag(&mut self) -> Result<[u8; 4]> {
        Ok(self.take(4)?.try_into().unwrap())
    }
}

/// Reads a PCM WAV file from disk.
pub fn read_wav(path: &Path) -> Result<WavData> {
    let bytes = fs::read(path).map_err(|e| DspError::Io(format!("{}: {e}", path.display())))?;
    parse_wav(&bytes)
}

/// Parses a PCM WAV byte stream.
pub fn parse_wav(bytes: &[u8]) -> Result<WavData> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.tag()? != b"RIFF" {
        return Err(DspError::Ingest { offset: 0, reason: "missing RIFF magic".into() });
    }
    let _riff_len = r.u32()?;
    if &r.tag()? != b"WAVE" {
        return Err(DspError::Ingest { offset: 8, reason: "missing WAVE form type".into() });
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // codec, channels, rate, bits
    loop {
        if r.pos >= bytes.len() {
            return Err(r.err("no data chunk before end of file"));
        }
        let chunk_id = r.tag()?;
        let chunk_len = r.u32()? as usize;
        match &chunk_id {
            b"fmt " => {
                let fmt_offset = r.pos;
                if chunk_len < 16 {
                    return Err(r.err(format!("fmt chunk too small ({chunk_len} bytes)")));
                }
                let chunk = r.take(chunk_len)?;
                let mut codec = u16::from_le_bytes(chunk[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(chunk[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(chunk[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(chunk[14..16].try_into().unwrap());
                if codec == 0xFFFE {
                    // WAVE_FORMAT_EXTENSIBLE: the real codec leads the GUID.
                    if chunk_len < 40 {
                        return Err(DspError::Ingest {
                            offset: fmt_offset as u64,
                            reason: "extensible fmt chunk too small".into(),
                        });
                    }
                    codec = u16::from_le_bytes(chunk[24..26].try_into().unwrap());
                }
                fmt = Some((codec, channels, rate, bits));
            }
            b"data" => {
                let data_offset = r.pos as u64;
                let (codec, channels, rate, bits) = fmt.ok_or(DspError::Ingest {
                    offset: data_offset,
                    reason: "data chunk before fmt chunk".into(),
                })?;
                if channels == 0 || channels > 2 {
                    return Err(DspError::UnsupportedCodec {
                        offset: data_offset,
                        what: format!("{channels} channels (mono or stereo only)"),
                    });
                }
                let data = r.take(chunk_len)?;
                let interleaved = decode_samples(codec, bits, data, data_offset)?;
                return Ok(WavData { channels, sample_rate: rate, interleaved });
            }
            _ => {
                // Skip unknown chunks (word-aligned).
                r.take(chunk_len + (chunk_len & 1))?;
            }
        }
    }
}

fn decode_samples(codec: u16, bits: u16, data: &[u8], offset: u64) -> Result<Vec<f32>> {
    match (codec, bits) {
        (1, 16) => Ok(data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes(c.try_into().unwrap()) as f32 / 32768.0)
            .collect()),
        (1, 24) => Ok(data
            .chunks_exact(3)
            .map(|c| {
                let v = ((c[2] as i32) << 16 | (c[1] as i32) << 8 | c[0] as i32) << 8 >> 8;
                v as f32 / 8_388_608.0
            })
            .collect()),
        (3, 32) => Ok(data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()),
        (codec, bits) => Err(DspError::UnsupportedCodec {
            offset,
            what: format!("codec {codec} at {bits} bits (PCM 16/24 or float 32 only)"),
        }),
    }
}

/// Writes interleaved samples as a WAV file.
pub fn write_wav(
    path: &Path,
    interleaved: &[f32],
    channels: u16,
    sample_rate: u32,
    format: WavFormat,
) -> Result<()> {
    let bytes_per_sample = match format {
        WavFormat::Pcm16 => 2usize,
        WavFormat::Pcm24 => 3,
        WavFormat::Float32 => 4,
    };
    let data_len = interleaved.len() * bytes_per_sample;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    let codec: u16 = if format == WavFormat::Float32 { 3 } else { 1 };
    out.extend_from_slice(&codec.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    let block = channels as u32 * bytes_per_sample as u32;
    out.extend_from_slice(&(sample_rate * block).to_le_bytes()); // byte rate
    out.extend_from_slice(&(block as u16).to_le_bytes());
    out.extend_from_slice(&((bytes_per_sample * 8) as u16).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in interleaved {
        let clamped = s.clamp(-1.0, 1.0) as f64;
        match format {
            WavFormat::Pcm16 => {
                let v = (clamped * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            WavFormat::Pcm24 => {
                let v = (clamped * 8_388_608.0)
                    .round()
                    .clamp(-8_388_608.0, 8_388_607.0) as i32;
                out.extend_from_slice(&v.to_le_bytes()[..3]);
            }
            WavFormat::Float32 => out.extend_from_slice(&s.to_le_bytes()),
        }
    }
    fs::write(path, out).map_err(|e| DspError::Io(format!("{}: {e}", path.display())))
}
