//! MIMO-OFDM downlink resource grid, precoding, and reception.
//!
//! A resource grid spans `K` spatial streams, `L = n_rbs * 14` OFDM symbols,
//! and `W` subcarriers. Two symbols per resource block carry stream-orthogonal
//! pilots; the rest carry Gray-mapped payload. Edge subcarriers and the DC
//! subcarrier are nulled. The zero-forcing precoder inverts the communication
//! channel per subcarrier so each stream arrives with exactly unit gain, and
//! reception adds circularly-symmetric complex Gaussian noise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity_defect, SvdFactors};
use crate::tensor::{CsiAxes, CsiTensor};

/// Condition number above which a subcarrier is refused for zero forcing.
pub const ZF_CONDITION_LIMIT: f64 = 1e8;

/// Unit-energy constellations with the Gray mappings fixed below.
///
/// Per-axis Gray tables (left to right over bit patterns, then scaled to unit
/// mean energy):
/// - QPSK, 1 bit per axis:   0 -> +1, 1 -> -1 (scale 1/sqrt(2)), so bits
///   `00 -> (1+j)/sqrt(2)`.
/// - 16-QAM, 2 bits per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
///   (scale 1/sqrt(10)).
/// - 64-QAM, 3 bits per axis: 000 -> -7, 001 -> -5, 011 -> -3, 010 -> -1,
///   110 -> +1, 111 -> +3, 101 -> +5, 100 -> +7 (scale 1/sqrt(42)).
///
/// Within a symbol the in-phase bits come first, then the quadrature bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constellation {
    Qpsk,
    Qam16,
    Qam64,
}

const GRAY_AXIS_2: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];
const GRAY_AXIS_3: [f64; 8] = [-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0];

impl Constellation {
    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
            Constellation::Qam64 => 6,
        }
    }

    fn axis_bits(&self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn scale(&self) -> f64 {
        match self {
            Constellation::Qpsk => 1.0 / 2f64.sqrt(),
            Constellation::Qam16 => 1.0 / 10f64.sqrt(),
            Constellation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    fn axis_level(&self, pattern: usize) -> f64 {
        match self {
            Constellation::Qpsk => {
                if pattern == 0 { 1.0 } else { -1.0 }
            }
            Constellation::Qam16 => GRAY_AXIS_2[pattern],
            Constellation::Qam64 => GRAY_AXIS_3[pattern],
        }
    }

    fn axis_pattern(&self, level: f64) -> usize {
        let table: &[f64] = match self {
            Constellation::Qpsk => &[1.0, -1.0],
            Constellation::Qam16 => &GRAY_AXIS_2,
            Constellation::Qam64 => &GRAY_AXIS_3,
        };
        let mut best = 0;
        for (i, &l) in table.iter().enumerate() {
            if (level - l).abs() < (level - table[best]).abs() {
                best = i;
            }
        }
        best
    }

    /// Maps `bits_per_symbol` bits to one constellation point.
    pub fn map(&self, bits: &[u8]) -> Complex64 {
        assert_eq!(bits.len(), self.bits_per_symbol(), "bit group size");
        let ab = self.axis_bits();
        let pattern = |chunk: &[u8]| chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let i_level = self.axis_level(pattern(&bits[..ab]));
        let q_level = self.axis_level(pattern(&bits[ab..]));
        Complex64::new(i_level, q_level) * self.scale()
    }

    /// Nearest-point decision back to bits.
    pub fn demap(&self, symbol: Complex64) -> Vec<u8> {
        let ab = self.axis_bits();
        let unscaled = symbol / self.scale();
        let mut bits = Vec::with_capacity(self.bits_per_symbol());
        for pattern in [self.axis_pattern(unscaled.re), self.axis_pattern(unscaled.im)] {
            for k in (0..ab).rev() {
                bits.push(((pattern >> k) & 1) as u8);
            }
        }
        bits
    }

    /// Every constellation point.
    pub fn points(&self) -> Vec<Complex64> {
        let n = 1usize << self.bits_per_symbol();
        (0..n)
            .map(|v| {
                let bits: Vec<u8> = (0..self.bits_per_symbol())
                    .rev()
                    .map(|k| ((v >> k) & 1) as u8)
                    .collect();
                self.map(&bits)
            })
            .collect()
    }
}

/// Layout of the downlink resource grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Spatial streams K (one per served terminal).
    pub n_streams: usize,
    pub n_rbs: usize,
    pub symbols_per_rb: usize,
    /// Pilot symbol positions within each resource block, 0-based.
    pub pilot_positions: Vec<usize>,
    pub constellation: Constellation,
    /// Nulled subcarriers at the lower and upper band edge.
    pub n_guard_lower: usize,
    pub n_guard_upper: usize,
    /// Null the center subcarrier (index W/2).
    pub null_dc: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_streams: 2,
            n_rbs: 20,
            symbols_per_rb: 14,
            pilot_positions: vec![2, 11],
            constellation: Constellation::Qpsk,
            n_guard_lower: 5,
            n_guard_upper: 6,
            null_dc: true,
        }
    }
}

impl GridConfig {
    pub fn validate(&self, n_subcarriers: usize) -> Result<()> {
        if self.n_streams == 0 || self.n_rbs == 0 || self.symbols_per_rb == 0 {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &p in &self.pilot_positions {
            if p >= self.symbols_per_rb {
                return Err(Error::Config(format!(
                    "pilot position {p} outside the {}-symbol resource block",
                    self.symbols_per_rb
                )));
            }
            if !seen.insert(p) {
                return Err(Error::Config(format!("duplicate pilot position {p}")));
            }
        }
        if self.active_subcarriers(n_subcarriers).is_empty() {
            return Err(Error::Config("guards and DC null leave no active subcarriers".into()));
        }
        Ok(())
    }

    /// Total OFDM symbols L.
    pub fn n_symbols(&self) -> usize {
        self.n_rbs * self.symbols_per_rb
    }

    /// True at pilot symbol indices.
    pub fn pilot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_symbols()];
        for rb in 0..self.n_rbs {
            for &p in &self.pilot_positions {
                mask[rb * self.symbols_per_rb + p] = true;
            }
        }
        mask
    }

    /// Subcarriers carrying energy: everything minus the edge guards and the
    /// DC null.
    pub fn active_subcarriers(&self, n_subcarriers: usize) -> Vec<usize> {
        let dc = n_subcarriers / 2;
        (0..n_subcarriers)
            .filter(|&w| {
                w >= self.n_guard_lower
                    && w < n_subcarriers.saturating_sub(self.n_guard_upper)
                    && !(self.null_dc && w == dc)
            })
            .collect()
    }

    /// Payload bits required to fill one grid.
    pub fn required_bits(&self, n_subcarriers: usize) -> usize {
        let n_data_symbols = self.n_symbols() - self.pilot_mask().iter().filter(|&&m| m).count();
        self.n_streams
            * n_data_symbols
            * self.active_subcarriers(n_subcarriers).len()
            * self.constellation.bits_per_symbol()
    }
}

/// Filled resource grid `S` of shape `[K x L x W]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceGrid {
    pub s: ndarray::Array3<Complex64>,
    pub pilot_mask: Vec<bool>,
    pub config: GridConfig,
}

impl ResourceGrid {
    pub fn n_streams(&self) -> usize {
        self.s.shape()[0]
    }

    pub fn n_symbols(&self) -> usize {
        self.s.shape()[1]
    }

    pub fn n_subcarriers(&self) -> usize {
        self.s.shape()[2]
    }

    /// `K x L` slice at subcarrier `w`.
    pub fn mat(&self, w: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n_streams(), self.n_symbols(), |k, l| self.s[[k, l, w]])
    }
}

/// Zero-forcing precoder `[N_t x K x W]`; each subcarrier slice satisfies
/// `H_w P_w = I_K` to within 1e-8 (unit effective stream gains).
#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderTensor {
    pub tensor: CsiTensor,
}

impl PrecoderTensor {
    pub fn mat(&self, w: usize) -> DMatrix<Complex64> {
        self.tensor.mat(w)
    }
}

/// Received sensing-side signal together with what produced it.
#[derive(Clone, Debug)]
pub struct SensingObservation {
    /// `[N_r x L x W]` received samples.
    pub y: CsiTensor,
    pub precoder: PrecoderTensor,
    pub grid: ResourceGrid,
    pub noise_variance: f64,
}

/// Uniform payload bits (values 0/1).
pub fn generate_bits(n_bits: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n_bits).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Fills a resource grid from payload bits.
///
/// Pilot symbols carry the stream-orthogonal pattern
/// `S[k, pilot q, w] = exp(-j 2 pi k q / K)` on every active subcarrier
/// (`q` counts pilot symbols from the start of the grid); with a pilot count
/// divisible by K the pilot block satisfies `S_p S_p^H = (#pilots) I`,
/// exactly so for K in {1, 2, 4} where every phase is a quarter turn.
/// Data resource elements consume bits in symbol-major order:
/// OFDM symbol, then active subcarrier, then stream.
pub fn map_to_rg(bits: &[u8], cfg: &GridConfig, n_subcarriers: usize) -> Result<ResourceGrid> {
    cfg.validate(n_subcarriers)?;
    let required = cfg.required_bits(n_subcarriers);
    if bits.len() != required {
        return Err(Error::Shape(format!(
            "grid needs exactly {required} bits, got {}",
            bits.len()
        )));
    }
    if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Config(format!("bits must be 0 or 1, found {bad}")));
    }
    let k_streams = cfg.n_streams;
    let l_total = cfg.n_symbols();
    let active = cfg.active_subcarriers(n_subcarriers);
    let mask = cfg.pilot_mask();
    let bps = cfg.constellation.bits_per_symbol();

    let mut s = ndarray::Array3::zeros((k_streams, l_total, n_subcarriers));
    let mut bit_cursor = 0usize;
    let mut pilot_counter = 0usize;
    for l in 0..l_total {
        if mask[l] {
            for k in 0..k_streams {
                // Reduce the phase index first so long grids lose no
                // precision; quarter-turn phases become exact constants, so
                // for K in {1, 2, 4} the pilot Gram is exactly diagonal.
                let r = (k * pilot_counter) % k_streams;
                let value = if 4 * r % k_streams == 0 {
                    const QUARTER: [Complex64; 4] = [
                        Complex64::new(1.0, 0.0),
                        Complex64::new(0.0, -1.0),
                        Complex64::new(-1.0, 0.0),
                        Complex64::new(0.0, 1.0),
                    ];
                    QUARTER[4 * r / k_streams]
                } else {
                    let phase =
                        -2.0 * std::f64::consts::PI * r as f64 / k_streams as f64;
                    Complex64::from_polar(1.0, phase)
                };
                for &w in &active {
                    s[[k, l, w]] = value;
                }
            }
            pilot_counter += 1;
        } else {
            for &w in &active {
                for k in 0..k_streams {
                    let group = &bits[bit_cursor..bit_cursor + bps];
                    s[[k, l, w]] = cfg.constellation.map(group);
                    bit_cursor += bps;
                }
            }
        }
    }
    debug_assert_eq!(bit_cursor, bits.len());
    Ok(ResourceGrid { s, pilot_mask: mask, config: cfg.clone() })
}

/// Nearest-point demapping of the data resource elements back to bits, in the
/// same order `map_to_rg` consumed them.
pub fn demap_from_rg(rg: &ResourceGrid) -> Vec<u8> {
    let cfg = &rg.config;
    let active = cfg.active_subcarriers(rg.n_subcarriers());
    let mut bits = Vec::with_capacity(cfg.required_bits(rg.n_subcarriers()));
    for l in 0..rg.n_symbols() {
        if rg.pilot_mask[l] {
            continue;
        }
        for &w in &active {
            for k in 0..rg.n_streams() {
                bits.extend(cfg.constellation.demap(rg.s[[k, l, w]]));
            }
        }
    }
    bits
}

/// Zero-forcing precoder from the communication channel (`[K x N_t x W]`).
/// Guard subcarriers get zero slices; active subcarriers whose channel is
/// rank-deficient or conditioned worse than [`ZF_CONDITION_LIMIT`] are
/// rejected with the subcarrier named in the error.
pub fn zf_precoder(h_comm: &CsiTensor, active: &[usize]) -> Result<PrecoderTensor> {
    if h_comm.axes != CsiAxes::UeTx {
        return Err(Error::Shape(format!(
            "precoder expects a terminals-by-transmitters channel, got {:?}",
            h_comm.axes
        )));
    }
    let (k_streams, n_tx, w_count) = (h_comm.rows(), h_comm.cols(), h_comm.subcarriers());
    if k_streams > n_tx {
        return Err(Error::Config(format!(
            "cannot zero-force {k_streams} streams from {n_tx} transmit elements"
        )));
    }
    let mut p = CsiTensor::zeros(CsiAxes::TxStream, n_tx, k_streams, w_count);
    for &w in active {
        if w >= w_count {
            return Err(Error::Shape(format!("active subcarrier {w} outside grid of {w_count}")));
        }
        let h = h_comm.mat(w);
        let svd = SvdFactors::compute(&h)?;
        if svd.rank < k_streams || svd.condition_number() >= ZF_CONDITION_LIMIT {
            return Err(Error::Numerical(format!(
                "subcarrier {w}: channel condition number {:.3e} exceeds {ZF_CONDITION_LIMIT:.0e}",
                svd.condition_number()
            )));
        }
        // Pinv gives H P = I directly; the diagonal normalization that makes
        // every effective stream gain exactly 1 is the identity here.
        let p_w = svd.pseudo_inverse();
        let defect = identity_defect(&(&h * &p_w));
        if defect > 1e-8 {
            return Err(Error::Numerical(format!(
                "subcarrier {w}: effective channel deviates from identity by {defect:.3e}"
            )));
        }
        p.set_mat(w, &p_w);
    }
    Ok(PrecoderTensor { tensor: p })
}

/// Propagates the precoded grid through the sensing channel and adds
/// circularly-symmetric complex Gaussian noise of per-entry variance
/// `noise_var`. Noise is drawn in receiver-element, symbol, subcarrier order.
pub fn transmit_and_receive(
    h_sens: &CsiTensor,
    precoder: &PrecoderTensor,
    rg: &ResourceGrid,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<SensingObservation> {
    if h_sens.axes != CsiAxes::RxTx {
        return Err(Error::Shape("sensing channel must be receivers by transmitters".into()));
    }
    let (n_rx, n_tx, w_count) = (h_sens.rows(), h_sens.cols(), h_sens.subcarriers());
    precoder.tensor.expect(CsiAxes::TxStream, n_tx, rg.n_streams(), w_count)?;
    if rg.n_subcarriers() != w_count {
        return Err(Error::Shape("grid and channel disagree on subcarrier count".into()));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Config(format!("noise variance must be non-negative, got {noise_var}")));
    }
    let l_total = rg.n_symbols();
    let mut y = CsiTensor::zeros(CsiAxes::RxTime, n_rx, l_total, w_count);
    for w in 0..w_count {
        let effective = h_sens.mat(w) * precoder.mat(w); // N_r x K
        let y_w = effective * rg.mat(w);
        y.set_mat(w, &y_w);
    }
    if noise_var > 0.0 {
        let sigma = (noise_var / 2.0).sqrt();
        for z in y.data.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(re * sigma, im * sigma);
        }
    }
    Ok(SensingObservation {
        y,
        precoder: precoder.clone(),
        grid: rg.clone(),
        noise_variance: noise_var,
    })
}
