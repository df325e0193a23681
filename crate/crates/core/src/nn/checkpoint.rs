//! Model checkpoints: a small binary container with the architecture as
//! JSON and the weights as little-endian f32.
//!
//! Layout: 8-byte magic `NISACNN1`, u32 version, u64 config length, config
//! JSON, u64 weight count, weights. Everything multi-byte is little-endian.
//! Weights are stored in f32; training keeps f64, so loading a checkpoint
//! rounds to f32 precision by design.

use std::io::{Read, Write};
use std::path::Path;

use super::CnnConfig;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"NISACNN1";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: CnnConfig,
    pub params: Vec<f64>,
}

pub fn save_checkpoint(path: &Path, config: &CnnConfig, params: &[f64]) -> Result<()> {
    let json = serde_json::to_vec(config)
        .map_err(|e| Error::Format(format!("cannot encode network config: {e}")))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(json.len() as u64).to_le_bytes())?;
    file.write_all(&json)?;
    file.write_all(&(params.len() as u64).to_le_bytes())?;
    for &p in params {
        file.write_all(&(p as f32).to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut file, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format("not a network checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut file, "version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let json_len = u64::from_le_bytes(read_array(&mut file, "config length")?) as usize;
    let mut json = vec![0u8; json_len];
    read_exact(&mut file, &mut json, "config")?;
    let config: CnnConfig = serde_json::from_slice(&json)
        .map_err(|e| Error::Format(format!("cannot decode network config: {e}")))?;
    let n_params = u64::from_le_bytes(read_array(&mut file, "weight count")?) as usize;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let v = f32::from_le_bytes(read_array(&mut file, "weights")?);
        params.push(v as f64);
    }
    let mut probe = [0u8; 1];
    if file.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint weights".into()));
    }
    Ok(Checkpoint { config, params })
}

fn read_exact(file: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    file.read_exact(buf)
        .map_err(|_| Error::Format(format!("checkpoint truncated while reading {what}")))
}

fn read_array<const N: usize>(file: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(file, &mut buf, what)?;
    Ok(buf)
}
