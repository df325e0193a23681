//! One TOML-loadable configuration for the whole pipeline.
//!
//! Every section has defaults, so a config file only needs the fields it
//! changes. Derived quantities (network input shape, output head, label
//! length) are computed here so the dataset, pipeline, and CLI cannot drift
//! apart.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ArrayGeometry, ChannelConfig};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::features::{FeatureKind, Fusion};
use crate::geometry::{MapGrid, MapRepr};
use crate::nn::{CnnConfig, HeadKind, TrainConfig};
use crate::ofdm::GridConfig;
use crate::scenes::SceneConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArraysConfig {
    pub n_tx: usize,
    pub n_rx: usize,
}

impl Default for ArraysConfig {
    fn default() -> Self {
        Self { n_tx: 4, n_rx: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturesConfig {
    pub kind: FeatureKind,
    pub fusion: Fusion,
    /// Rescale estimated and reference CSI to unit peak modulus before the
    /// feature transform.
    pub normalize: bool,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self { kind: FeatureKind::BeamDelay, fusion: Fusion::Sub, normalize: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub repr: MapRepr,
    pub roi_min: [f64; 2],
    pub roi_max: [f64; 2],
    pub cells_per_side: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { repr: MapRepr::Probability, roi_min: [-2.0, -2.0], roi_max: [2.0, 2.0], cells_per_side: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnShapeConfig {
    pub block_widths: Vec<usize>,
}

impl Default for CnnShapeConfig {
    fn default() -> Self {
        Self { block_widths: vec![16, 16, 32, 32] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_records: usize,
    /// Per-entry noise variance at the sensing receiver; `None` uses the
    /// thermal value implied by the channel section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance_override: Option<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n_records: 2000, noise_variance_override: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub arrays: ArraysConfig,
    pub scene: SceneConfig,
    pub channel: ChannelConfig,
    pub grid: GridConfig,
    pub estimator: EstimatorConfig,
    pub features: FeaturesConfig,
    pub map: MapConfig,
    pub cnn: CnnShapeConfig,
    pub train: TrainConfig,
    pub dataset: DatasetConfig,
}

impl RunConfig {
    /// Loads and validates a TOML config. An unreadable path is reported as
    /// a config error, not I/O: pointing at the wrong file is a usage
    /// mistake, and the CLI keeps exit code 2 for failures on data artifacts.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.channel.validate()?;
        self.grid.validate(self.channel.n_subcarriers)?;
        self.estimator.validate()?;
        self.train.validate()?;
        if self.arrays.n_tx == 0 || self.arrays.n_rx == 0 {
            return Err(Error::Config("array sizes must be positive".into()));
        }
        if self.grid.n_streams != self.scene.n_ues {
            return Err(Error::Config(format!(
                "{} streams but {} terminals; one stream serves one terminal",
                self.grid.n_streams, self.scene.n_ues
            )));
        }
        if self.grid.n_streams > self.arrays.n_tx {
            return Err(Error::Config(format!(
                "cannot serve {} streams from {} transmit elements",
                self.grid.n_streams, self.arrays.n_tx
            )));
        }
        if self.map.repr == MapRepr::Probability && self.scene.n_targets != 1 {
            return Err(Error::Config(
                "the probability map needs exactly one target per scene".into(),
            ));
        }
        if self.dataset.n_records == 0 {
            return Err(Error::Config("dataset must have at least one record".into()));
        }
        if let Some(n0) = self.dataset.noise_variance_override {
            if !n0.is_finite() || n0 < 0.0 {
                return Err(Error::Config(format!("noise variance override {n0} is invalid")));
            }
        }
        self.map_grid()?;
        self.cnn_config()?;
        Ok(())
    }

    pub fn map_grid(&self) -> Result<MapGrid> {
        crate::geometry::make_grid(self.map.roi_min, self.map.roi_max, self.map.cells_per_side)
    }

    pub fn tx_array(&self) -> ArrayGeometry {
        ArrayGeometry::ula(self.arrays.n_tx, self.scene.tx_center, self.channel.carrier_hz)
    }

    pub fn rx_array(&self) -> ArrayGeometry {
        ArrayGeometry::ula(self.arrays.n_rx, self.scene.rx_center, self.channel.carrier_hz)
    }

    /// Sensing noise variance: the override if set, otherwise the thermal
    /// value from the channel parameters.
    pub fn noise_variance(&self) -> f64 {
        self.dataset
            .noise_variance_override
            .unwrap_or_else(|| crate::channel::noise_variance(&self.channel))
    }

    /// Output head implied by the map representation.
    pub fn head(&self) -> HeadKind {
        match self.map.repr {
            MapRepr::Probability => HeadKind::SoftmaxCce,
            MapRepr::Soft | MapRepr::Hard => HeadKind::SigmoidBce,
        }
    }

    /// Network architecture derived from the feature and map sections.
    pub fn cnn_config(&self) -> Result<CnnConfig> {
        let w = self.channel.n_subcarriers;
        let per_tensor_channels = self.arrays.n_tx;
        let input_channels = match self.features.fusion {
            Fusion::Sta => 2 * per_tensor_channels,
            Fusion::Sub | Fusion::Nor => per_tensor_channels,
        };
        let input_width = match self.features.kind {
            FeatureKind::BeamDelay => w,
            FeatureKind::Direct => 2 * w,
        };
        let cfg = CnnConfig {
            input_channels,
            input_height: self.arrays.n_rx,
            input_width,
            block_widths: self.cnn.block_widths.clone(),
            output_dim: self.map.cells_per_side * self.map.cells_per_side,
            head: self.head(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// JSON with a fixed field order, used for hashing and config echoes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
