//! Encoder checkpoints: one JSON header line, then every matrix as
//! little-endian `f32`, row-major, at the byte offsets listed in the header
//! (relative to the first byte after the header's newline).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{AttentionConfig, EncoderParams};
use crate::{Error, Result};

const FORMAT: &str = "rulematch-encoder";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub offset: u64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub d_e: usize,
    pub h: usize,
    #[serde(rename = "L_max")]
    pub l_max: usize,
    pub vocab_size: usize,
    pub sections: Vec<Section>,
}

impl CheckpointHeader {
    pub fn config(&self) -> AttentionConfig {
        AttentionConfig { d_model: self.d_e, heads: self.h, max_len: self.l_max, vocab_size: self.vocab_size }
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, params: &EncoderParams) -> Result<()> {
    let cfg = params.config;
    let mut offset = 0u64;
    let mut sections = Vec::new();
    for (name, m) in params.tensors() {
        sections.push(Section { name, offset, rows: m.nrows(), cols: m.ncols() });
        offset += (m.len() * 4) as u64;
    }
    let header = CheckpointHeader {
        format: FORMAT.into(),
        version: 1,
        d_e: cfg.d_model,
        h: cfg.heads,
        l_max: cfg.max_len,
        vocab_size: cfg.vocab_size,
        sections,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (_, m) in params.tensors() {
        for x in m.iter() {
            w.write_all(&(*x as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<(CheckpointHeader, EncoderParams)> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let header: CheckpointHeader = serde_json::from_slice(&line)
        .map_err(|e| Error::Parse(format!("checkpoint header: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::Parse(format!("not an encoder checkpoint: format {:?}", header.format)));
    }
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut params = EncoderParams::zeros(header.config())?;
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    if names.len() != header.sections.len() {
        return Err(Error::Parse("checkpoint section count does not match its config".into()));
    }
    for ((m, name), sec) in params.tensors_mut().into_iter().zip(&names).zip(&header.sections) {
        if &sec.name != name || sec.rows != m.nrows() || sec.cols != m.ncols() {
            return Err(Error::Parse(format!("unexpected section {:?}", sec.name)));
        }
        let start = sec.offset as usize;
        let end = start + m.len() * 4;
        let bytes = data
            .get(start..end)
            .ok_or_else(|| Error::Parse(format!("section {name} runs past end of file")))?;
        for (x, chunk) in m.iter_mut().zip(bytes.chunks_exact(4)) {
            *x = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
    }
    Ok((header, params))
}
