//! Scene geometry and discrete occupancy maps.
//!
//! A rectangular region of interest is tiled into `n x n` square cells and
//! scenes of axis-aligned cuboid targets are rasterized onto that grid three
//! ways: a probability map (one-hot at the single target's center cell), a
//! hard map (1 where a target footprint overlaps the cell with positive
//! area), and a soft map (exact fraction of the cell covered). Targets are
//! labeled by their 2-D footprint on a fixed horizontal plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square grid tiling the region of interest, row-major from the `roi_min`
/// corner: cell `i` sits at column `i % n` (x direction) and row `i / n`
/// (y direction).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub roi_min: [f64; 2],
    pub roi_max: [f64; 2],
    pub cells_per_side: usize,
}

/// Which map construction produced a [`DiscreteMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapRepr {
    /// One-hot over cells; single-target scenes only.
    Probability,
    /// Indicator of positive-area overlap with any target.
    Hard,
    /// Covered-area fraction of each cell, in `[0, 1]`.
    Soft,
}

/// Cell values over a [`MapGrid`], all in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMap {
    pub values: Vec<f64>,
    pub repr: MapRepr,
    pub grid: MapGrid,
}

/// Axis-aligned cuboid given by center and half-extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// One realization of the scene: targets, user terminals, transceiver
/// placement, and the environment box everything must fit inside. The box is
/// centered at `(0, 0, box_extents[2] / 2)` so its floor is z = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub targets: Vec<Cuboid>,
    pub ues: Vec<[f64; 3]>,
    pub tx_center: [f64; 3],
    pub rx_center: [f64; 3],
    pub box_extents: [f64; 3],
    /// Height of the horizontal plane on which targets are rasterized.
    pub label_plane_z: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    /// Intersection area; zero when the rectangles only touch.
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let dx = self.x1.min(other.x1) - self.x0.max(other.x0);
        let dy = self.y1.min(other.y1) - self.y0.max(other.y0);
        if dx > 0.0 && dy > 0.0 { dx * dy } else { 0.0 }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

impl Cuboid {
    /// Footprint of the horizontal slice at height `z`, if the cuboid reaches
    /// that plane.
    pub fn footprint_at(&self, z: f64) -> Option<Rect> {
        if (z - self.center[2]).abs() > self.half_extents[2] {
            return None;
        }
        Some(Rect {
            x0: self.center[0] - self.half_extents[0],
            x1: self.center[0] + self.half_extents[0],
            y0: self.center[1] - self.half_extents[1],
            y1: self.center[1] + self.half_extents[1],
        })
    }

    /// Euclidean distance from a point to the cuboid surface (zero inside).
    pub fn distance_to_point(&self, p: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for d in 0..3 {
            let excess = ((p[d] - self.center[d]).abs() - self.half_extents[d]).max(0.0);
            acc += excess * excess;
        }
        acc.sqrt()
    }

    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| (p[d] - self.center[d]).abs() <= self.half_extents[d])
    }
}

impl MapGrid {
    pub fn cell_count(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    /// Side lengths of one cell.
    pub fn cell_size(&self) -> [f64; 2] {
        let n = self.cells_per_side as f64;
        [(self.roi_max[0] - self.roi_min[0]) / n, (self.roi_max[1] - self.roi_min[1]) / n]
    }

    pub fn cell_area(&self) -> f64 {
        let s = self.cell_size();
        s[0] * s[1]
    }

    pub fn cell_rect(&self, i: usize) -> Rect {
        assert!(i < self.cell_count(), "cell index out of range");
        let n = self.cells_per_side;
        let [dx, dy] = self.cell_size();
        let ix = (i % n) as f64;
        let iy = (i / n) as f64;
        Rect {
            x0: self.roi_min[0] + ix * dx,
            x1: self.roi_min[0] + (ix + 1.0) * dx,
            y0: self.roi_min[1] + iy * dy,
            y1: self.roi_min[1] + (iy + 1.0) * dy,
        }
    }

    pub fn cell_center(&self, i: usize) -> [f64; 2] {
        let r = self.cell_rect(i);
        [0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)]
    }

    /// Cell containing a point, or `None` outside the region of interest.
    /// Points exactly on an interior cell edge belong to the lower-index cell.
    pub fn cell_index_of(&self, p: [f64; 2]) -> Option<usize> {
        let n = self.cells_per_side;
        let axis = |x: f64, min: f64, max: f64, d: f64| -> Option<usize> {
            if x < min || x > max {
                return None;
            }
            let t = (x - min) / d;
            let mut k = t.floor() as isize;
            // Exact boundary hits resolve to the lower-index neighbor.
            if t == t.floor() && k > 0 {
                k -= 1;
            }
            Some((k.max(0) as usize).min(n - 1))
        };
        let [dx, dy] = self.cell_size();
        let ix = axis(p[0], self.roi_min[0], self.roi_max[0], dx)?;
        let iy = axis(p[1], self.roi_min[1], self.roi_max[1], dy)?;
        Some(iy * n + ix)
    }

    pub fn roi_rect(&self) -> Rect {
        Rect {
            x0: self.roi_min[0],
            x1: self.roi_max[0],
            y0: self.roi_min[1],
            y1: self.roi_max[1],
        }
    }
}

/// Validated grid construction.
pub fn make_grid(roi_min: [f64; 2], roi_max: [f64; 2], cells_per_side: usize) -> Result<MapGrid> {
    if cells_per_side == 0 {
        return Err(Error::Config("cells_per_side must be at least 1".into()));
    }
    if roi_max[0] <= roi_min[0] || roi_max[1] <= roi_min[1] {
        return Err(Error::Config(format!(
            "region of interest is empty: min {roi_min:?}, max {roi_max:?}"
        )));
    }
    Ok(MapGrid { roi_min, roi_max, cells_per_side })
}

impl Scene {
    /// Footprints of all targets on the labeling plane.
    pub fn footprints(&self) -> Vec<Rect> {
        self.targets.iter().filter_map(|t| t.footprint_at(self.label_plane_z)).collect()
    }

    /// Environment box as a [`Cuboid`], floor on z = 0.
    pub fn environment_box(&self) -> Cuboid {
        Cuboid {
            center: [0.0, 0.0, self.box_extents[2] / 2.0],
            half_extents: [
                self.box_extents[0] / 2.0,
                self.box_extents[1] / 2.0,
                self.box_extents[2] / 2.0,
            ],
        }
    }

    /// Checks the structural invariants: everything inside the environment
    /// box, every target reaching the labeling plane with pairwise-disjoint
    /// footprints, and no user terminal touching a target.
    pub fn validate(&self) -> Result<()> {
        let env = self.environment_box();
        for (k, ue) in self.ues.iter().enumerate() {
            if !env.contains_point(*ue) {
                return Err(Error::Config(format!("ue {k} lies outside the environment box")));
            }
        }
        for p in [self.tx_center, self.rx_center] {
            if !env.contains_point(p) {
                return Err(Error::Config("transceiver lies outside the environment box".into()));
            }
        }
        let mut rects = Vec::new();
        for (k, t) in self.targets.iter().enumerate() {
            for d in 0..3 {
                if t.half_extents[d] <= 0.0 {
                    return Err(Error::Config(format!("target {k} has a non-positive extent")));
                }
                if (t.center[d] - env.center[d]).abs() + t.half_extents[d]
                    > env.half_extents[d] + 1e-12
                {
                    return Err(Error::Config(format!(
                        "target {k} pokes outside the environment box"
                    )));
                }
            }
            let rect = t.footprint_at(self.label_plane_z).ok_or_else(|| {
                Error::Config(format!("target {k} does not reach the labeling plane"))
            })?;
            rects.push(rect);
        }
        for a in 0..rects.len() {
            for b in (a + 1)..rects.len() {
                if rects[a].overlap_area(&rects[b]) > 0.0 {
                    return Err(Error::Config(format!("targets {a} and {b} overlap")));
                }
            }
        }
        for (k, ue) in self.ues.iter().enumerate() {
            for (t_idx, t) in self.targets.iter().enumerate() {
                if t.distance_to_point(*ue) == 0.0 {
                    return Err(Error::Config(format!("ue {k} touches target {t_idx}")));
                }
            }
        }
        Ok(())
    }
}

/// Indicator map: cell value 1 where any target footprint overlaps the cell
/// with positive area.
pub fn hard_map(scene: &Scene, grid: &MapGrid) -> Result<DiscreteMap> {
    let footprints = disjoint_footprints(scene)?;
    let values = (0..grid.cell_count())
        .map(|i| {
            let cell = grid.cell_rect(i);
            let hit = footprints.iter().any(|f| f.overlap_area(&cell) > 0.0);
            if hit { 1.0 } else { 0.0 }
        })
        .collect();
    Ok(DiscreteMap { values, repr: MapRepr::Hard, grid: *grid })
}

/// Coverage map: cell value is the exact fraction of the cell area covered by
/// target footprints.
pub fn soft_map(scene: &Scene, grid: &MapGrid) -> Result<DiscreteMap> {
    let footprints = disjoint_footprints(scene)?;
    let cell_area = grid.cell_area();
    let values = (0..grid.cell_count())
        .map(|i| {
            let cell = grid.cell_rect(i);
            let covered: f64 = footprints.iter().map(|f| f.overlap_area(&cell)).sum();
            (covered / cell_area).min(1.0)
        })
        .collect();
    Ok(DiscreteMap { values, repr: MapRepr::Soft, grid: *grid })
}

/// One-hot map at the cell containing the single target's center. Errors for
/// zero or multiple targets and for a center outside the region of interest.
pub fn probability_map(scene: &Scene, grid: &MapGrid) -> Result<DiscreteMap> {
    if scene.targets.len() != 1 {
        return Err(Error::Config(format!(
            "probability map needs exactly one target, scene has {}",
            scene.targets.len()
        )));
    }
    let c = scene.targets[0].center;
    let idx = grid
        .cell_index_of([c[0], c[1]])
        .ok_or_else(|| Error::Config("target center lies outside the region of interest".into()))?;
    let mut values = vec![0.0; grid.cell_count()];
    values[idx] = 1.0;
    Ok(DiscreteMap { values, repr: MapRepr::Probability, grid: *grid })
}

fn disjoint_footprints(scene: &Scene) -> Result<Vec<Rect>> {
    let rects = scene.footprints();
    for a in 0..rects.len() {
        for b in (a + 1)..rects.len() {
            if rects[a].overlap_area(&rects[b]) > 0.0 {
                return Err(Error::Config(format!(
                    "target footprints {a} and {b} overlap; maps assume disjoint targets"
                )));
            }
        }
    }
    Ok(rects)
}

impl DiscreteMap {
    /// Index of the largest value; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}
