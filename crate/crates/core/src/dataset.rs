//! Dataset generation and the `.nisac` container format.
//!
//! A dataset record holds everything needed to replay one downlink frame:
//! the sampled scene, its payload bits, both synthesized channels, and the
//! occupancy-map label. Channels are quantized to f32 at generation time so
//! the in-memory dataset and the file on disk describe the same numbers.
//!
//! File layout: 8-byte magic `NISACDS1`, a u64 manifest length, the manifest,
//! then one binary segment per record. The manifest is JSON lines: a header
//! line with the full config echo and its hash, then one line per record with
//! its scene, label, and segment offset. Segments pack the payload bits
//! LSB-first, then the communication and sensing channels as little-endian
//! f32 (re, im) pairs in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{synthesize_comm_channel, synthesize_sensing_channel};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{Cuboid, MapRepr, Scene};
use crate::ofdm::generate_bits;
use crate::rng::{stream, StreamDomain};
use crate::scenes::{sample_scene, SceneConfig};
use crate::tensor::{CsiAxes, CsiTensor};

const MAGIC: &[u8; 8] = b"NISACDS1";
const VERSION: u32 = 1;

/// The scene reduced to what generation drew; everything else (box size,
/// array placement, label plane) comes from the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub target_centers: Vec<[f64; 3]>,
    pub target_half_extents: Vec<[f64; 3]>,
    pub ue_positions: Vec<[f64; 3]>,
}

impl SceneSummary {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            target_centers: scene.targets.iter().map(|t| t.center).collect(),
            target_half_extents: scene.targets.iter().map(|t| t.half_extents).collect(),
            ue_positions: scene.ues.clone(),
        }
    }

    /// Rebuilds the full scene against the generating config.
    pub fn to_scene(&self, cfg: &SceneConfig) -> Result<Scene> {
        if self.target_centers.len() != self.target_half_extents.len() {
            return Err(Error::Format("scene summary target lists disagree".into()));
        }
        Ok(Scene {
            targets: self
                .target_centers
                .iter()
                .zip(&self.target_half_extents)
                .map(|(&center, &half_extents)| Cuboid { center, half_extents })
                .collect(),
            ues: self.ue_positions.clone(),
            tx_center: cfg.tx_center,
            rx_center: cfg.rx_center,
            box_extents: cfg.box_extents,
            label_plane_z: cfg.target_height,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub index: u64,
    pub scene: SceneSummary,
    pub bits: Vec<u8>,
    /// Terminals-by-transmitters communication channel.
    pub h_comm: CsiTensor,
    /// Receivers-by-transmitters sensing channel (background plus targets).
    pub h_sens: CsiTensor,
    pub label: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub config_hash: String,
    pub n_records: usize,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    index: u64,
    offset: u64,
    n_bits: usize,
    comm_shape: [usize; 3],
    sens_shape: [usize; 3],
    label: Vec<f64>,
    scene: SceneSummary,
}

/// Rounds every entry through f32, the storage precision.
pub fn quantize_to_f32(t: &CsiTensor) -> CsiTensor {
    CsiTensor {
        data: t.data.mapv(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64)),
        axes: t.axes,
    }
}

fn label_for(scene: &Scene, cfg: &RunConfig) -> Result<Vec<f64>> {
    let grid = cfg.map_grid()?;
    let map = match cfg.map.repr {
        MapRepr::Probability => crate::geometry::probability_map(scene, &grid)?,
        MapRepr::Soft => crate::geometry::soft_map(scene, &grid)?,
        MapRepr::Hard => crate::geometry::hard_map(scene, &grid)?,
    };
    Ok(map.values)
}

/// Draws every record for the configured dataset. Record `i` uses scene
/// stream index `i` and bit stream index `i`, so any record can be
/// regenerated in isolation.
pub fn generate_dataset(cfg: &RunConfig) -> Result<Dataset> {
    cfg.validate()?;
    let tx = cfg.tx_array();
    let rx = cfg.rx_array();
    let n_bits = cfg.grid.required_bits(cfg.channel.n_subcarriers);
    let mut records = Vec::with_capacity(cfg.dataset.n_records);
    for i in 0..cfg.dataset.n_records as u64 {
        let scene = sample_scene(&cfg.scene, cfg.seed, i)?;
        let h_comm = quantize_to_f32(&synthesize_comm_channel(&scene, &cfg.channel, &tx)?);
        let h_sens =
            quantize_to_f32(&synthesize_sensing_channel(&scene, &cfg.channel, &tx, &rx)?);
        let bits = generate_bits(n_bits, &mut stream(cfg.seed, StreamDomain::Bits, i));
        let label = label_for(&scene, cfg)?;
        records.push(DatasetRecord {
            index: i,
            scene: SceneSummary::from_scene(&scene),
            bits,
            h_comm,
            h_sens,
            label,
        });
    }
    Ok(Dataset {
        header: DatasetHeader {
            version: VERSION,
            config_hash: cfg.config_hash(),
            n_records: cfg.dataset.n_records,
            config: cfg.clone(),
        },
        records,
    })
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        debug_assert!(b <= 1);
        bytes[i / 8] |= b << (i % 8);
    }
    bytes
}

fn unpack_bits(bytes: &[u8], n_bits: usize) -> Vec<u8> {
    (0..n_bits).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()
}

fn tensor_bytes(t: &CsiTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(t.data.len() * 8);
    for z in t.data.iter() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

fn tensor_from_bytes(bytes: &[u8], axes: CsiAxes, shape: [usize; 3]) -> Result<CsiTensor> {
    let n = shape[0] * shape[1] * shape[2];
    if bytes.len() != n * 8 {
        return Err(Error::Format("tensor segment length mismatch".into()));
    }
    let mut t = CsiTensor::zeros(axes, shape[0], shape[1], shape[2]);
    for (z, chunk) in t.data.iter_mut().zip(bytes.chunks_exact(8)) {
        let re = f32::from_le_bytes(chunk[0..4].try_into().expect("chunk size"));
        let im = f32::from_le_bytes(chunk[4..8].try_into().expect("chunk size"));
        *z = Complex64::new(re as f64, im as f64);
    }
    Ok(t)
}

impl Dataset {
    /// Writes the container, replacing `path` atomically on success.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut blob = Vec::new();
        let mut lines = Vec::with_capacity(self.records.len() + 1);
        lines.push(
            serde_json::to_string(&self.header)
                .map_err(|e| Error::Format(format!("cannot encode dataset header: {e}")))?,
        );
        for r in &self.records {
            let line = RecordLine {
                index: r.index,
                offset: blob.len() as u64,
                n_bits: r.bits.len(),
                comm_shape: [r.h_comm.rows(), r.h_comm.cols(), r.h_comm.subcarriers()],
                sens_shape: [r.h_sens.rows(), r.h_sens.cols(), r.h_sens.subcarriers()],
                label: r.label.clone(),
                scene: r.scene.clone(),
            };
            blob.extend_from_slice(&pack_bits(&r.bits));
            blob.extend_from_slice(&tensor_bytes(&r.h_comm));
            blob.extend_from_slice(&tensor_bytes(&r.h_sens));
            lines.push(
                serde_json::to_string(&line)
                    .map_err(|e| Error::Format(format!("cannot encode record {}: {e}", r.index)))?,
            );
        }
        let manifest = lines.join("\n");
        let tmp = path.with_extension("nisac.tmp");
        {
            let mut file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            file.write_all(MAGIC)?;
            file.write_all(&(manifest.len() as u64).to_le_bytes())?;
            file.write_all(manifest.as_bytes())?;
            file.write_all(&blob)?;
            file.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)
            .map_err(|_| Error::Format("dataset truncated while reading magic".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("not a dataset file (bad magic)".into()));
        }
        let mut len_bytes = [0u8; 8];
        file.read_exact(&mut len_bytes)
            .map_err(|_| Error::Format("dataset truncated while reading manifest length".into()))?;
        let manifest_len = u64::from_le_bytes(len_bytes) as usize;
        let mut manifest = vec![0u8; manifest_len];
        file.read_exact(&mut manifest)
            .map_err(|_| Error::Format("dataset truncated while reading manifest".into()))?;
        let manifest = String::from_utf8(manifest)
            .map_err(|_| Error::Format("dataset manifest is not UTF-8".into()))?;
        let mut blob = Vec::new();
        file.read_to_end(&mut blob)?;

        let mut lines = manifest.lines();
        let header: DatasetHeader = serde_json::from_str(
            lines.next().ok_or_else(|| Error::Format("dataset manifest is empty".into()))?,
        )
        .map_err(|e| Error::Format(format!("cannot decode dataset header: {e}")))?;
        if header.version != VERSION {
            return Err(Error::Format(format!("unsupported dataset version {}", header.version)));
        }
        if header.config.config_hash() != header.config_hash {
            return Err(Error::Format(
                "dataset config echo does not match its recorded hash".into(),
            ));
        }
        let mut records = Vec::with_capacity(header.n_records);
        let mut cursor = 0usize;
        for line in lines {
            let rl: RecordLine = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("cannot decode record line: {e}")))?;
            if rl.offset as usize != cursor {
                return Err(Error::Format(format!(
                    "record {} offset {} does not match its position {cursor}",
                    rl.index, rl.offset
                )));
            }
            let bits_len = rl.n_bits.div_ceil(8);
            let comm_len = rl.comm_shape.iter().product::<usize>() * 8;
            let sens_len = rl.sens_shape.iter().product::<usize>() * 8;
            let end = cursor + bits_len + comm_len + sens_len;
            if end > blob.len() {
                return Err(Error::Format(format!("record {} runs past the blob", rl.index)));
            }
            let bits = unpack_bits(&blob[cursor..cursor + bits_len], rl.n_bits);
            let h_comm = tensor_from_bytes(
                &blob[cursor + bits_len..cursor + bits_len + comm_len],
                CsiAxes::UeTx,
                rl.comm_shape,
            )?;
            let h_sens = tensor_from_bytes(
                &blob[cursor + bits_len + comm_len..end],
                CsiAxes::RxTx,
                rl.sens_shape,
            )?;
            records.push(DatasetRecord {
                index: rl.index,
                scene: rl.scene,
                bits,
                h_comm,
                h_sens,
                label: rl.label,
            });
            cursor = end;
        }
        if records.len() != header.n_records {
            return Err(Error::Format(format!(
                "manifest lists {} records but promises {}",
                records.len(),
                header.n_records
            )));
        }
        if cursor != blob.len() {
            return Err(Error::Format("trailing bytes after the last record".into()));
        }
        Ok(Dataset { header, records })
    }
}
