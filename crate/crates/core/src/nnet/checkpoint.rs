//! Binary checkpoint format.
//!
//! ```text
//! magic      8 bytes  "CRLMCKPT"
//! version    u32
//! preset     u32 length + UTF-8 name ("tiny", "small", "base" or "custom")
//! layers, d_model, heads, max_len, vocab   u32 each
//! seed       u64
//! tensors    u32 count, then per tensor:
//!            u32 name length + UTF-8 name, u32 rank, u32 dims..., f32 data (row-major)
//! ```
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::params::{EncoderConfig, EncoderParams, SizePreset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"CRLMCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub preset: String,
    pub config: EncoderConfig,
    pub vocab_size: usize,
    pub seed: u64,
}

fn preset_name(config: &EncoderConfig) -> &'static str {
    SizePreset::ALL
        .into_iter()
        .find(|p| p.config() == *config)
        .map_or("custom", SizePreset::name)
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    if len > 1 << 16 {
        return Err(Error::Checkpoint("string length out of range".into()));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf).map_err(truncated)?;
    String::from_utf8(buf).map_err(|_| Error::Checkpoint("name is not UTF-8".into()))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("truncated or unreadable: {e}"))
}

pub fn write_checkpoint<T: Scalar, W: Write>(w: &mut W, params: &EncoderParams<T>, seed: u64) -> std::io::Result<()> {
    let c = params.config;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    write_str(w, preset_name(&c))?;
    for v in [c.layers, c.d_model, c.heads, c.max_len, params.vocab_size()] {
        w.write_u32::<LittleEndian>(v as u32)?;
    }
    w.write_u64::<LittleEndian>(seed)?;
    let tensors = params.tensors();
    w.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for (name, t) in tensors {
        write_str(w, &name)?;
        w.write_u32::<LittleEndian>(t.ndim() as u32)?;
        for &d in t.shape() {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        for v in t.iter() {
            w.write_f32::<LittleEndian>(v.as_f64() as f32)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: Read>(r: &mut R) -> Result<(CheckpointHeader, EncoderParams<T>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let preset = read_str(r)?;
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    }
    let config = EncoderConfig {
        layers: dims[0],
        d_model: dims[1],
        heads: dims[2],
        max_len: dims[3],
    };
    let vocab_size = dims[4];
    let seed = r.read_u64::<LittleEndian>().map_err(truncated)?;
    let mut params = EncoderParams::<T>::init(config, vocab_size, 0)?;
    let count = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let mut tensors = params.tensors_mut();
    if count != tensors.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {count}",
            tensors.len()
        )));
    }
    for (expected_name, view) in tensors.iter_mut() {
        let name = read_str(r)?;
        if &name != expected_name {
            return Err(Error::Checkpoint(format!("expected tensor {expected_name}, found {name}")));
        }
        let rank = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let shape: Vec<usize> = (0..rank)
            .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
            .collect::<std::io::Result<_>>()
            .map_err(truncated)?;
        if shape != view.shape() {
            return Err(Error::Checkpoint(format!("tensor {name} has shape {shape:?}, expected {:?}", view.shape())));
        }
        for v in view.iter_mut() {
            *v = T::from_f64_lossy(r.read_f32::<LittleEndian>().map_err(truncated)? as f64);
        }
    }
    drop(tensors);
    let header = CheckpointHeader {
        preset,
        config,
        vocab_size,
        seed,
    };
    Ok((header, params))
}

pub fn save_checkpoint<T: Scalar>(path: impl AsRef<Path>, params: &EncoderParams<T>, seed: u64) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params, seed).expect("write to vec");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<(CheckpointHeader, EncoderParams<T>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut bytes.as_slice())
}
