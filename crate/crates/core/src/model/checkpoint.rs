//! Parameter container: an 8-byte little-endian header length, a JSON header
//! describing every tensor, then the tensors as little-endian `f32` payloads.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{Group, Parameters};

pub const FORMAT: &str = "gamerep-checkpoint/1";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    group: Group,
    shape: Vec<usize>,
    /// Byte offset into the payload section.
    offset: usize,
    /// Element count.
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    config: ModelConfig,
    trainable: Vec<(Group, bool)>,
    tensors: Vec<TensorEntry>,
}

pub fn to_bytes(params: &Parameters) -> Result<Vec<u8>> {
    let mut offset = 0;
    let tensors = params
        .tensors
        .iter()
        .map(|t| {
            let e = TensorEntry {
                name: t.name.clone(),
                group: t.group,
                shape: t.shape.clone(),
                offset,
                len: t.data.len(),
            };
            offset += 4 * t.data.len();
            e
        })
        .collect();
    let header = Header {
        format: FORMAT.into(),
        config: params.config.clone(),
        trainable: Group::ALL.iter().map(|&g| (g, params.is_trainable(g))).collect(),
        tensors,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + offset);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &params.tensors {
        for v in &t.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Parameters> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let len_bytes: [u8; 8] = bytes.get(..8).ok_or_else(|| bad("truncated header length"))?.try_into().expect("8 bytes");
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let json = bytes.get(8..8usize.saturating_add(header_len)).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if header.format != FORMAT {
        return Err(Error::Checkpoint(format!("unsupported format {}", header.format)));
    }
    let payload = &bytes[8 + header_len..];
    let mut params = Parameters::zeros(&header.config)?;
    if params.tensors.len() != header.tensors.len() {
        return Err(bad("tensor count does not match the model config"));
    }
    for (t, e) in params.tensors.iter_mut().zip(&header.tensors) {
        if t.name != e.name || t.shape != e.shape || t.data.len() != e.len {
            return Err(Error::Checkpoint(format!("tensor {} does not match the model config", e.name)));
        }
        let raw = payload
            .get(e.offset..e.offset + 4 * e.len)
            .ok_or_else(|| Error::Checkpoint(format!("payload of {} is truncated", e.name)))?;
        for (v, chunk) in t.data.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
    }
    for (g, flag) in header.trainable {
        params.set_trainable(g, flag);
    }
    if !params.is_finite() {
        return Err(bad("non-finite parameter values"));
    }
    Ok(params)
}

pub fn save(params: &Parameters, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Parameters> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
