//! Compact residual CNN with hand-rolled training.
//!
//! The network is small enough that everything runs on the CPU in f64: a
//! 3x3 stem convolution, one 2x2 max pool, a short stack of residual blocks,
//! global average pooling, and a linear head read out through either a
//! softmax or a sigmoid. Parameters live in one flat `Vec<f64>` so the
//! optimizer, checkpoints, and finite-difference tests all see the same
//! layout.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod train;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use loss::{head_output, loss_and_logit_grad, HeadKind, PROB_CLAMP};
pub use model::{CnnModel, ForwardCache};
pub use train::{
    evaluate, split_indices, train, EpochStats, FeatureSource, InMemorySource, TrainConfig,
    TrainOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture description; all shapes derive from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    /// Output channel count of the stem convolution and of each residual
    /// block, in order. The stem uses the first entry.
    pub block_widths: Vec<usize>,
    pub output_dim: usize,
    pub head: HeadKind,
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0
            || self.input_height == 0
            || self.input_width == 0
            || self.output_dim == 0
        {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        if self.block_widths.is_empty() || self.block_widths.contains(&0) {
            return Err(Error::Config("block widths must be positive and non-empty".into()));
        }
        Ok(())
    }
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            input_channels: 4,
            input_height: 4,
            input_width: 32,
            block_widths: vec![16, 16, 32, 32],
            output_dim: 4,
            head: HeadKind::SoftmaxCce,
        }
    }
}
