//! Synthetic frequency-domain channels from point-scatterer geometry.
//!
//! Both channels are sums of single-bounce paths evaluated per element pair:
//! a scatterer at `s` contributes `rho / (d_tx * d_rx) * exp(-j 2 pi f_w tau)`
//! to each entry, with `tau = (d_tx + d_rx) / c` from the exact element
//! positions. The sensing channel (rx array x tx array) adds a direct
//! transmit-to-receive leakage path; the communication channel (terminals x
//! tx array) always carries the line-of-sight path. Environment scatterers
//! sit on the box walls, are drawn once per environment seed, and do not move
//! with the targets, so the background part of two scenes sharing a seed is
//! identical bit for bit.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Scene};
use crate::rng::{stream, StreamDomain};
use crate::tensor::{CsiAxes, CsiTensor};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Paths may not start or end closer to an element than this, meters.
pub const MIN_PATH_DISTANCE: f64 = 1e-3;

/// Uniform linear array along the y axis, half-wavelength spacing at the
/// carrier, centered on `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    pub center: [f64; 3],
    pub carrier_hz: f64,
}

impl ArrayGeometry {
    pub fn ula(n_elements: usize, center: [f64; 3], carrier_hz: f64) -> Self {
        Self { n_elements, center, carrier_hz }
    }

    pub fn spacing(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz / 2.0
    }

    /// Element positions, symmetric about the center.
    pub fn element_positions(&self) -> Vec<[f64; 3]> {
        let d = self.spacing();
        let mid = (self.n_elements as f64 - 1.0) / 2.0;
        (0..self.n_elements)
            .map(|i| {
                [self.center[0], self.center[1] + (i as f64 - mid) * d, self.center[2]]
            })
            .collect()
    }
}

/// Point scatterer with an amplitude reflectivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: [f64; 3],
    pub reflectivity: f64,
}

/// Physical layer configuration shared by both channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    /// Subcarrier count W; at least 8.
    pub n_subcarriers: usize,
    pub carrier_hz: f64,
    /// Wall scatterers drawn once per `env_seed`.
    pub n_env_scatterers: usize,
    /// Each target face carries an `m x m` lattice of scatterers.
    pub scatterers_per_face_side: usize,
    /// Residual transmit-to-receive self-interference, dB (power);
    /// `-inf` disables the leakage path entirely.
    pub leakage_db: f64,
    pub noise_figure_db: f64,
    pub temperature_k: f64,
    pub env_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 4e7,
            n_subcarriers: 128,
            carrier_hz: 6e9,
            n_env_scatterers: 24,
            scatterers_per_face_side: 3,
            leakage_db: -40.0,
            noise_figure_db: 9.0,
            temperature_k: 290.0,
            env_seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 8 {
            return Err(Error::Config(format!(
                "n_subcarriers must be at least 8, got {}",
                self.n_subcarriers
            )));
        }
        if !(self.bandwidth_hz > 0.0) || !(self.carrier_hz > 0.0) {
            return Err(Error::Config("bandwidth and carrier must be positive".into()));
        }
        if !(self.temperature_k > 0.0) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if self.leakage_db > 0.0 {
            return Err(Error::Config("leakage_db must be non-positive".into()));
        }
        Ok(())
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth_hz / self.n_subcarriers as f64
    }

    /// Subcarrier center frequencies, symmetric about the carrier:
    /// `f_w = f_c + (w - (W-1)/2) * spacing` for `w = 0..W`.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let w_count = self.n_subcarriers;
        let df = self.subcarrier_spacing();
        let mid = (w_count as f64 - 1.0) / 2.0;
        (0..w_count).map(|w| self.carrier_hz + (w as f64 - mid) * df).collect()
    }

    /// Amplitude scale of the leakage path (`10^(leakage_db / 20)`).
    pub fn leakage_amplitude(&self) -> f64 {
        10f64.powf(self.leakage_db / 20.0)
    }
}

/// Thermal noise power per subcarrier: `k_B * T * (B / W) * 10^(NF / 10)`.
pub fn noise_variance(cfg: &ChannelConfig) -> f64 {
    let per_subcarrier_bw = cfg.bandwidth_hz / cfg.n_subcarriers as f64;
    BOLTZMANN * cfg.temperature_k * per_subcarrier_bw * 10f64.powf(cfg.noise_figure_db / 10.0)
}

/// Frequency response of one single-bounce path between an element pair:
/// `rho / (d1 * d2) * exp(-j 2 pi f_w (d1 + d2) / c)` for each `f_w`.
pub fn scatterer_response(
    tx: [f64; 3],
    rx: [f64; 3],
    s: &Scatterer,
    freqs: &[f64],
) -> Result<Vec<Complex64>> {
    let d1 = dist(tx, s.position);
    let d2 = dist(s.position, rx);
    if d1 < MIN_PATH_DISTANCE || d2 < MIN_PATH_DISTANCE {
        return Err(Error::Config(format!(
            "scatterer at {:?} sits within {MIN_PATH_DISTANCE} m of an array element",
            s.position
        )));
    }
    Ok(path_response(s.reflectivity / (d1 * d2), (d1 + d2) / SPEED_OF_LIGHT, freqs))
}

/// Frequency response of a direct path with amplitude `scale / d`.
pub fn direct_response(
    a: [f64; 3],
    b: [f64; 3],
    scale: f64,
    freqs: &[f64],
) -> Result<Vec<Complex64>> {
    let d = dist(a, b);
    if d < MIN_PATH_DISTANCE {
        return Err(Error::Config("direct path endpoints within 1 mm of each other".into()));
    }
    Ok(path_response(scale / d, d / SPEED_OF_LIGHT, freqs))
}

/// `amp * exp(-j 2 pi f_w tau)` evaluated by phase recurrence over the
/// uniformly spaced `freqs`.
fn path_response(amp: f64, tau: f64, freqs: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(freqs.len());
    if freqs.is_empty() {
        return out;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut value = Complex64::from_polar(amp, -two_pi * freqs[0] * tau);
    if freqs.len() > 1 {
        let df = freqs[1] - freqs[0];
        let step = Complex64::from_polar(1.0, -two_pi * df * tau);
        for _ in freqs {
            out.push(value);
            value *= step;
        }
    } else {
        out.push(value);
    }
    out
}

/// Wall scatterers for the environment seed: positions uniform over the four
/// vertical walls of the box, reflectivity uniform in `[0.1, 0.4]`.
pub fn environment_scatterers(cfg: &ChannelConfig, box_extents: [f64; 3]) -> Vec<Scatterer> {
    let mut rng = stream(cfg.env_seed, StreamDomain::Environment, 0);
    let hx = box_extents[0] / 2.0;
    let hy = box_extents[1] / 2.0;
    let hz = box_extents[2];
    (0..cfg.n_env_scatterers)
        .map(|_| {
            let wall = rng.random_range(0..4u8);
            let u = rng.random_range(0.0..1.0);
            let z = rng.random_range(0.0..hz);
            let position = match wall {
                0 => [-hx + 2.0 * hx * u, -hy, z],
                1 => [-hx + 2.0 * hx * u, hy, z],
                2 => [-hx, -hy + 2.0 * hy * u, z],
                _ => [hx, -hy + 2.0 * hy * u, z],
            };
            Scatterer { position, reflectivity: rng.random_range(0.1..0.4) }
        })
        .collect()
}

/// Scatterer lattice on the four vertical faces of a target cuboid. Each
/// point carries reflectivity `face_area / m^2`, so the total return is
/// independent of the lattice resolution.
pub fn target_scatterers(target: &Cuboid, per_face_side: usize) -> Vec<Scatterer> {
    let m = per_face_side.max(1);
    let [hx, hy, hz] = target.half_extents;
    let [cx, cy, cz] = target.center;
    let mut out = Vec::with_capacity(4 * m * m);
    let lattice = |h: f64, k: usize| -> f64 { -h + 2.0 * h * (k as f64 + 0.5) / m as f64 };
    for sign in [-1.0, 1.0] {
        // faces with outward normal along x
        let area = (2.0 * hy) * (2.0 * hz);
        for a in 0..m {
            for b in 0..m {
                out.push(Scatterer {
                    position: [cx + sign * hx, cy + lattice(hy, a), cz + lattice(hz, b)],
                    reflectivity: area / (m * m) as f64,
                });
            }
        }
        // faces with outward normal along y
        let area = (2.0 * hx) * (2.0 * hz);
        for a in 0..m {
            for b in 0..m {
                out.push(Scatterer {
                    position: [cx + lattice(hx, a), cy + sign * hy, cz + lattice(hz, b)],
                    reflectivity: area / (m * m) as f64,
                });
            }
        }
    }
    out
}

/// Sensing channel split into the static background (environment + leakage)
/// and the target-dependent part; the full channel is their sum.
#[derive(Clone, Debug)]
pub struct SensingChannelParts {
    pub background: CsiTensor,
    pub target: CsiTensor,
}

impl SensingChannelParts {
    pub fn total(&self) -> CsiTensor {
        self.background.add(&self.target).expect("parts share a shape")
    }
}

/// Sensing channel `[n_rx x n_tx x W]` for a scene.
pub fn synthesize_sensing_channel(
    scene: &Scene,
    cfg: &ChannelConfig,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Result<CsiTensor> {
    Ok(synthesize_sensing_channel_parts(scene, cfg, tx, rx)?.total())
}

/// Sensing channel with the background/target split exposed.
pub fn synthesize_sensing_channel_parts(
    scene: &Scene,
    cfg: &ChannelConfig,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Result<SensingChannelParts> {
    cfg.validate()?;
    let freqs = cfg.subcarrier_frequencies();
    let tx_pos = tx.element_positions();
    let rx_pos = rx.element_positions();
    let w_count = cfg.n_subcarriers;

    let mut background = CsiTensor::zeros(CsiAxes::RxTx, rx_pos.len(), tx_pos.len(), w_count);
    for s in environment_scatterers(cfg, scene.box_extents) {
        accumulate_scatterer(&mut background, &tx_pos, &rx_pos, &s, &freqs)?;
    }
    let leak = cfg.leakage_amplitude();
    if leak > 0.0 {
        for (j, rp) in rx_pos.iter().enumerate() {
            for (i, tp) in tx_pos.iter().enumerate() {
                let resp = direct_response(*tp, *rp, leak, &freqs)?;
                for (w, v) in resp.iter().enumerate() {
                    background.data[[j, i, w]] += v;
                }
            }
        }
    }

    let mut target = CsiTensor::zeros(CsiAxes::RxTx, rx_pos.len(), tx_pos.len(), w_count);
    for cuboid in &scene.targets {
        for s in target_scatterers(cuboid, cfg.scatterers_per_face_side) {
            accumulate_scatterer(&mut target, &tx_pos, &rx_pos, &s, &freqs)?;
        }
    }
    Ok(SensingChannelParts { background, target })
}

/// Communication channel `[n_ues x n_tx x W]`: line of sight plus single
/// bounces off targets and environment scatterers.
pub fn synthesize_comm_channel(
    scene: &Scene,
    cfg: &ChannelConfig,
    tx: &ArrayGeometry,
) -> Result<CsiTensor> {
    cfg.validate()?;
    let freqs = cfg.subcarrier_frequencies();
    let tx_pos = tx.element_positions();
    let w_count = cfg.n_subcarriers;
    let mut scatterers = environment_scatterers(cfg, scene.box_extents);
    for cuboid in &scene.targets {
        scatterers.extend(target_scatterers(cuboid, cfg.scatterers_per_face_side));
    }

    let mut h = CsiTensor::zeros(CsiAxes::UeTx, scene.ues.len(), tx_pos.len(), w_count);
    for (k, ue) in scene.ues.iter().enumerate() {
        for (i, tp) in tx_pos.iter().enumerate() {
            let resp = direct_response(*tp, *ue, 1.0, &freqs)?;
            for (w, v) in resp.iter().enumerate() {
                h.data[[k, i, w]] += v;
            }
            for s in &scatterers {
                let resp = scatterer_response(*tp, *ue, s, &freqs)?;
                for (w, v) in resp.iter().enumerate() {
                    h.data[[k, i, w]] += v;
                }
            }
        }
    }
    Ok(h)
}

fn accumulate_scatterer(
    out: &mut CsiTensor,
    tx_pos: &[[f64; 3]],
    rx_pos: &[[f64; 3]],
    s: &Scatterer,
    freqs: &[f64],
) -> Result<()> {
    for (j, rp) in rx_pos.iter().enumerate() {
        for (i, tp) in tx_pos.iter().enumerate() {
            let resp = scatterer_response(*tp, *rp, s, freqs)?;
            for (w, v) in resp.iter().enumerate() {
                out.data[[j, i, w]] += v;
            }
        }
    }
    Ok(())
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_scene() -> Scene {
        Scene {
            targets: vec![],
            ues: vec![],
            tx_center: [-2.4, 0.1, 2.5],
            rx_center: [-2.4, -0.1, 2.5],
            box_extents: [5.0, 5.0, 3.0],
            label_plane_z: 1.0,
        }
    }

    fn scene_with_target(x: f64, y: f64) -> Scene {
        let mut s = empty_scene();
        s.targets.push(Cuboid { center: [x, y, 1.0], half_extents: [0.25; 3] });
        s
    }

    fn arrays(n: usize) -> (ArrayGeometry, ArrayGeometry) {
        (
            ArrayGeometry::ula(n, [-2.4, 0.1, 2.5], 6e9),
            ArrayGeometry::ula(n, [-2.4, -0.1, 2.5], 6e9),
        )
    }

    #[test]
    fn ula_spacing_and_centroid() {
        let a = ArrayGeometry::ula(8, [1.0, -0.5, 2.0], 6e9);
        let pos = a.element_positions();
        let lambda_half = SPEED_OF_LIGHT / 6e9 / 2.0;
        for pair in pos.windows(2) {
            assert!((dist(pair[0], pair[1]) - lambda_half).abs() < 1e-12);
        }
        let centroid: f64 = pos.iter().map(|p| p[1]).sum::<f64>() / pos.len() as f64;
        assert!((centroid - a.center[1]).abs() < 1e-12);
        assert_eq!(pos.len(), 8);
    }

    #[test]
    fn single_scatterer_matches_scalar_formula() {
        let cfg = ChannelConfig::default();
        let (tx, rx) = arrays(1);
        let s = Scatterer { position: [1.0, 0.5, 1.0], reflectivity: 0.7 };
        let freqs = cfg.subcarrier_frequencies();
        let resp = scatterer_response(tx.center, rx.center, &s, &freqs).unwrap();
        let d1 = dist(tx.center, s.position);
        let d2 = dist(s.position, rx.center);
        let tau = (d1 + d2) / SPEED_OF_LIGHT;
        for (w, f) in freqs.iter().enumerate() {
            let expected = Complex64::from_polar(
                0.7 / (d1 * d2),
                -2.0 * std::f64::consts::PI * f * tau,
            );
            assert!((resp[w] - expected).norm() < 1e-10 * expected.norm(), "subcarrier {w}");
        }
    }

    #[test]
    fn equidistant_scatterer_gives_equal_entries() {
        // Two-element arrays centered on the x axis; any scatterer in the
        // y = 0 plane is equidistant from both elements of each array, so all
        // four entries of each subcarrier slice share one value.
        let tx = ArrayGeometry::ula(2, [0.0, 0.0, 1.0], 6e9);
        let rx = ArrayGeometry::ula(2, [0.5, 0.0, 1.0], 6e9);
        let s = Scatterer { position: [3.0, 0.0, 1.0], reflectivity: 1.0 };
        let freqs = ChannelConfig::default().subcarrier_frequencies();
        let mut values = Vec::new();
        for tp in tx.element_positions() {
            for rp in rx.element_positions() {
                values.push(scatterer_response(tp, rp, &s, &freqs).unwrap());
            }
        }
        for other in &values[1..] {
            assert_eq!(&values[0], other);
        }
    }

    #[test]
    fn empty_scene_without_background_is_zero() {
        let cfg = ChannelConfig {
            n_env_scatterers: 0,
            leakage_db: f64::NEG_INFINITY,
            ..ChannelConfig::default()
        };
        let (tx, rx) = arrays(4);
        let h = synthesize_sensing_channel(&empty_scene(), &cfg, &tx, &rx).unwrap();
        assert!(h.data.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn background_ignores_target_position() {
        let cfg = ChannelConfig::default();
        let (tx, rx) = arrays(4);
        let a = synthesize_sensing_channel_parts(&scene_with_target(1.0, 1.0), &cfg, &tx, &rx)
            .unwrap();
        let b = synthesize_sensing_channel_parts(&scene_with_target(-1.5, 0.3), &cfg, &tx, &rx)
            .unwrap();
        assert_eq!(a.background.data, b.background.data);
        assert_ne!(a.target.data, b.target.data);
    }

    #[test]
    fn swapping_arrays_transposes_single_bounce_slices() {
        let cfg = ChannelConfig { leakage_db: f64::NEG_INFINITY, ..ChannelConfig::default() };
        let (tx, rx) = arrays(3);
        let scene = scene_with_target(0.8, -0.6);
        let fwd = synthesize_sensing_channel(&scene, &cfg, &tx, &rx).unwrap();
        let swapped = synthesize_sensing_channel(&scene, &cfg, &rx, &tx).unwrap();
        for ((j, i, w), z) in fwd.data.indexed_iter() {
            assert_eq!(swapped.data[[i, j, w]], *z);
        }
    }

    #[test]
    fn single_path_energy_concentrates_in_two_delay_bins() {
        let w_count = 64usize;
        let tx = [0.0, 0.0, 1.0];
        let rx = [0.4, 0.0, 1.0];
        let s = Scatterer { position: [2.0, 1.0, 1.0], reflectivity: 1.0 };
        let tau = (dist(tx, s.position) + dist(s.position, rx)) / SPEED_OF_LIGHT;
        // Place the delay at an integer bin and at a bin offset of 0.2.
        for target_bin in [8.0, 8.2] {
            let df = target_bin / (w_count as f64 * tau);
            let freqs: Vec<f64> =
                (0..w_count).map(|w| 6e9 + (w as f64 - 31.5) * df).collect();
            let resp = scatterer_response(tx, rx, &s, &freqs).unwrap();
            // Brute-force unitary IDFT along the subcarrier axis.
            let mut energy = vec![0.0f64; w_count];
            for (v, e) in energy.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, r) in resp.iter().enumerate() {
                    let phase = 2.0 * std::f64::consts::PI * (v * w % w_count) as f64
                        / w_count as f64;
                    acc += r * Complex64::from_polar(1.0, phase);
                }
                *e = acc.norm_sqr() / w_count as f64;
            }
            let total: f64 = energy.iter().sum();
            let nearest = target_bin.round() as usize % w_count;
            let second = if target_bin.fract() >= 0.5 || target_bin.fract() == 0.0 {
                (nearest + w_count - 1) % w_count
            } else {
                (nearest + 1) % w_count
            };
            let top2 = energy[nearest] + energy[second];
            assert!(
                top2 / total >= 0.9,
                "bin {target_bin}: {top2} of {total} in bins {nearest}, {second}"
            );
        }
    }

    #[test]
    fn noise_variance_matches_reference_point() {
        let cfg = ChannelConfig {
            bandwidth_hz: 4e7,
            n_subcarriers: 128, // 312.5 kHz per subcarrier
            noise_figure_db: 0.0,
            temperature_k: 290.0,
            ..ChannelConfig::default()
        };
        let n0 = noise_variance(&cfg);
        assert!((n0 - 1.2512e-15).abs() / 1.2512e-15 < 1e-3);
        let with_nf = noise_variance(&ChannelConfig { noise_figure_db: 9.0, ..cfg });
        assert!((with_nf / n0 - 10f64.powf(0.9)).abs() < 1e-12);
    }

    #[test]
    fn scatterer_on_element_errors() {
        let (tx, rx) = arrays(2);
        let s = Scatterer { position: tx.element_positions()[0], reflectivity: 1.0 };
        let freqs = ChannelConfig::default().subcarrier_frequencies();
        assert!(scatterer_response(tx.element_positions()[0], rx.center, &s, &freqs).is_err());
    }

    #[test]
    fn los_only_comm_channel_has_geometric_phase_ramp() {
        let cfg = ChannelConfig {
            n_env_scatterers: 0,
            bandwidth_hz: 4e7,
            n_subcarriers: 16,
            ..ChannelConfig::default()
        };
        let tx = ArrayGeometry::ula(4, [-2.4, 0.1, 2.5], 6e9);
        let mut scene = empty_scene();
        scene.ues = vec![[-2.4 + 5.0, 0.1, 2.5]]; // on boresight, 5 m out
        let h = synthesize_comm_channel(&scene, &cfg, &tx).unwrap();
        let df = cfg.subcarrier_spacing();
        for (i, tp) in tx.element_positions().iter().enumerate() {
            let d = dist(*tp, scene.ues[0]);
            let expected_step =
                Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * df * d / SPEED_OF_LIGHT);
            for w in 0..cfg.n_subcarriers - 1 {
                let step = h.data[[0, i, w + 1]] / h.data[[0, i, w]];
                assert!((step - expected_step).norm() < 1e-10);
            }
            assert!((h.data[[0, i, 0]].norm() - 1.0 / d).abs() < 1e-12);
        }
    }

    #[test]
    fn comm_magnitude_follows_inverse_distance() {
        let cfg = ChannelConfig { n_env_scatterers: 0, n_subcarriers: 8, ..ChannelConfig::default() };
        let tx = ArrayGeometry::ula(4, [-2.4, 0.1, 2.5], 6e9);
        let mut near = empty_scene();
        near.ues = vec![[-2.4 + 5.0, 0.1, 2.5]];
        let mut far = empty_scene();
        far.ues = vec![[-2.4 + 50.0, 0.1, 2.5]];
        let h_near = synthesize_comm_channel(&near, &cfg, &tx).unwrap();
        let h_far = synthesize_comm_channel(&far, &cfg, &tx).unwrap();
        for i in 0..4 {
            let ratio = h_far.data[[0, i, 0]].norm() / h_near.data[[0, i, 0]].norm();
            assert!((ratio - 0.1).abs() < 1e-3, "element {i}: ratio {ratio}");
        }
    }

    #[test]
    fn environment_draw_is_deterministic_and_on_walls() {
        let cfg = ChannelConfig { n_env_scatterers: 40, env_seed: 5, ..ChannelConfig::default() };
        let a = environment_scatterers(&cfg, [5.0, 5.0, 3.0]);
        let b = environment_scatterers(&cfg, [5.0, 5.0, 3.0]);
        assert_eq!(a, b);
        for s in &a {
            let [x, y, z] = s.position;
            let on_wall =
                (x.abs() - 2.5).abs() < 1e-12 || (y.abs() - 2.5).abs() < 1e-12;
            assert!(on_wall && (0.0..=3.0).contains(&z));
            assert!((0.1..0.4).contains(&s.reflectivity));
        }
        let other = environment_scatterers(&ChannelConfig { env_seed: 6, ..cfg }, [5.0, 5.0, 3.0]);
        assert_ne!(a, other);
    }
}
