//! Desk-scale simulator for downlink integrated sensing and communication.
//!
//! The pipeline runs scene synthesis -> scatterer channel models -> a
//! MIMO-OFDM downlink with zero-forcing precoding -> regularized sensing
//! channel estimation -> beamspace/delay feature extraction -> a compact CNN
//! that reconstructs an occupancy map of the scene, plus the metrics and
//! statistical verifiers that back the whole chain.

pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod features;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod ofdm;
pub mod pipeline;
pub mod rng;
pub mod scenes;
pub mod tensor;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use geometry::{DiscreteMap, MapGrid, MapRepr, Scene};
pub use tensor::{CsiAxes, CsiTensor};
