//! Random scene sampling.
//!
//! Target centers and user terminals are drawn uniformly over configured
//! regions, with rejection resampling until the placement constraints hold
//! (terminals keep a minimum clearance from every target). Sampling is keyed
//! by `(seed, sample_index)` so any record of a dataset can be regenerated in
//! isolation, bit for bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Scene};
use crate::rng::{stream, StreamDomain};

/// Attempts per scene before sampling gives up.
pub const SAMPLE_ATTEMPT_BUDGET: usize = 10_000;

/// Placement regions and entity counts for scene sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Cubic target side length in meters.
    pub target_side: f64,
    /// `[min, max]` of the x/y region target centers are drawn from.
    pub target_region_min: [f64; 2],
    pub target_region_max: [f64; 2],
    /// Height of target centers (and of the labeling plane).
    pub target_height: f64,
    pub n_targets: usize,
    /// `[min, max]` of the x/y region terminals are drawn from.
    pub ue_region_min: [f64; 2],
    pub ue_region_max: [f64; 2],
    pub ue_height: f64,
    pub n_ues: usize,
    /// Environment box extents; the box floor sits on z = 0.
    pub box_extents: [f64; 3],
    pub tx_center: [f64; 3],
    pub rx_center: [f64; 3],
    /// Minimum clearance between a terminal and any target surface, meters.
    pub min_separation: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            target_side: 0.5,
            target_region_min: [-2.0, -2.0],
            target_region_max: [2.0, 2.0],
            target_height: 1.0,
            n_targets: 1,
            ue_region_min: [-2.0, -2.0],
            ue_region_max: [2.0, 2.0],
            ue_height: 1.0,
            n_ues: 2,
            box_extents: [5.0, 5.0, 3.0],
            tx_center: [-2.4, 0.1, 2.5],
            rx_center: [-2.4, -0.1, 2.5],
            min_separation: 0.01,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_side <= 0.0 {
            return Err(Error::Config("target_side must be positive".into()));
        }
        if self.min_separation < 0.0 {
            return Err(Error::Config("min_separation must be non-negative".into()));
        }
        for (lo, hi, what) in [
            (self.target_region_min, self.target_region_max, "target"),
            (self.ue_region_min, self.ue_region_max, "ue"),
        ] {
            if hi[0] < lo[0] || hi[1] < lo[1] {
                return Err(Error::Config(format!("{what} region is empty")));
            }
        }
        if self.box_extents.iter().any(|&e| e <= 0.0) {
            return Err(Error::Config("box_extents must be positive".into()));
        }
        Ok(())
    }

    /// Scene with no targets but the same terminals/transceivers layout, used
    /// for reference channel acquisition. Terminal placement matches the
    /// target-bearing scene drawn from the same `(seed, index)`.
    pub fn empty_scene(&self) -> Scene {
        Scene {
            targets: vec![],
            ues: vec![],
            tx_center: self.tx_center,
            rx_center: self.rx_center,
            box_extents: self.box_extents,
            label_plane_z: self.target_height,
        }
    }
}

/// Draws scene `index` of the stream identified by `seed`.
pub fn sample_scene(cfg: &SceneConfig, seed: u64, index: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = stream(seed, StreamDomain::Scene, index);
    let half = cfg.target_side / 2.0;
    let mut attempts = 0usize;

    let mut targets: Vec<Cuboid> = Vec::with_capacity(cfg.n_targets);
    while targets.len() < cfg.n_targets {
        if attempts >= SAMPLE_ATTEMPT_BUDGET {
            return Err(Error::Sampling(format!(
                "scene {index}: target placement exhausted {SAMPLE_ATTEMPT_BUDGET} attempts"
            )));
        }
        attempts += 1;
        let candidate = Cuboid {
            center: [
                sample_interval(&mut rng, cfg.target_region_min[0], cfg.target_region_max[0]),
                sample_interval(&mut rng, cfg.target_region_min[1], cfg.target_region_max[1]),
                cfg.target_height,
            ],
            half_extents: [half, half, half],
        };
        let disjoint = targets.iter().all(|t| {
            let fa = t.footprint_at(cfg.target_height).expect("target reaches its own plane");
            let fb = candidate.footprint_at(cfg.target_height).expect("candidate reaches plane");
            fa.overlap_area(&fb) == 0.0
        });
        if disjoint {
            targets.push(candidate);
        }
    }

    let mut ues: Vec<[f64; 3]> = Vec::with_capacity(cfg.n_ues);
    while ues.len() < cfg.n_ues {
        if attempts >= SAMPLE_ATTEMPT_BUDGET {
            return Err(Error::Sampling(format!(
                "scene {index}: terminal placement exhausted {SAMPLE_ATTEMPT_BUDGET} attempts"
            )));
        }
        attempts += 1;
        let candidate = [
            sample_interval(&mut rng, cfg.ue_region_min[0], cfg.ue_region_max[0]),
            sample_interval(&mut rng, cfg.ue_region_min[1], cfg.ue_region_max[1]),
            cfg.ue_height,
        ];
        let clear = targets.iter().all(|t| t.distance_to_point(candidate) >= cfg.min_separation);
        if clear {
            ues.push(candidate);
        }
    }

    let scene = Scene {
        targets,
        ues,
        tx_center: cfg.tx_center,
        rx_center: cfg.rx_center,
        box_extents: cfg.box_extents,
        label_plane_z: cfg.target_height,
    };
    scene.validate()?;
    Ok(scene)
}

fn sample_interval(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo { rng.random_range(lo..hi) } else { lo }
}
