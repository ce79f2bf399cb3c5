//! Checkpoint container: a JSON header (architecture document, parameter
//! shapes, byte offsets) followed by raw little-endian `f32` parameter
//! blocks in declaration order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Result, Tensor, TensorError};

const MAGIC: &[u8; 8] = b"TMBRCKP1";

/// One named parameter block inside the data section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the data section.
    pub offset: u64,
    /// Element count (each element is 4 bytes, little-endian f32).
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// Architecture document (a network spec in JSON form).
    pub architecture: serde_json::Value,
    pub params: Vec<ParamRecord>,
    /// Free-form extras, e.g. training configuration echoes.
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// A loaded or about-to-be-saved checkpoint.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<Tensor<f32>>,
}

impl Checkpoint {
    pub fn new(
        architecture: serde_json::Value,
        named_params: Vec<(String, Tensor<f32>)>,
        metadata: serde_json::Map<String, serde_json::Value>,
    ) -> Self {
        let mut records = Vec::with_capacity(named_params.len());
        let mut offset = 0u64;
        for (name, tensor) in &named_params {
            records.push(ParamRecord {
                name: name.clone(),
                shape: tensor.shape().to_vec(),
                offset,
                len: tensor.numel(),
            });
            offset += tensor.numel() as u64 * 4;
        }
        Checkpoint {
            header: CheckpointHeader {
                architecture,
                params: records,
                metadata,
            },
            params: named_params.into_iter().map(|(_, t)| t).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header =
            serde_json::to_vec(&self.header).map_err(|e| TensorError::CheckpointIo(e.to_string()))?;
        let mut file = File::create(path).map_err(io_err(path))?;
        file.write_all(MAGIC).map_err(io_err(path))?;
        file.write_all(&(header.len() as u64).to_le_bytes())
            .map_err(io_err(path))?;
        file.write_all(&header).map_err(io_err(path))?;
        let mut buf = Vec::new();
        for tensor in &self.params {
            buf.clear();
            buf.reserve(tensor.numel() * 4);
            for &v in tensor.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            file.write_all(&buf).map_err(io_err(path))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(io_err(path))?;
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(TensorError::CheckpointFormat(format!(
                "{}: missing container magic",
                path.display()
            )));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let data_start = 16 + header_len;
        if bytes.len() < data_start {
            return Err(TensorError::CheckpointFormat(format!(
                "{}: truncated header ({} of {} bytes)",
                path.display(),
                bytes.len() - 16,
                header_len
            )));
        }
        let header: CheckpointHeader = serde_json::from_slice(&bytes[16..data_start])
            .map_err(|e| TensorError::CheckpointFormat(e.to_string()))?;
        let data = &bytes[data_start..];
        let mut params = Vec::with_capacity(header.params.len());
        for record in &header.params {
            let start = record.offset as usize;
            let end = start + record.len * 4;
            if end > data.len() {
                return Err(TensorError::CheckpointFormat(format!(
                    "{}: block `{}` runs past end of file",
                    path.display(),
                    record.name
                )));
            }
            let values = data[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params.push(Tensor::from_vec(&record.shape, values)?);
        }
        Ok(Checkpoint { header, params })
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> TensorError + '_ {
    move |e| TensorError::CheckpointIo(format!("{}: {e}", path.display()))
}
