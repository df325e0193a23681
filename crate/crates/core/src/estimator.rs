//! Sensing channel estimation from one observed resource grid.
//!
//! The receiver knows the transmitted grid `S` and the precoder `P`, so each
//! subcarrier gives a linear model `Y_w = H_w X_w + N_w` with
//! `X_w = P_w S_w`. Two estimators are provided:
//!
//! - least squares, `Y_w X_w^+`, with rank-truncated pseudo-inversion;
//! - ridge-regularized, `Y_w X_w^H (X_w X_w^H + lambda I)^{-1}`, solved
//!   through a Hermitian factorization rather than an explicit inverse.
//!
//! The ridge estimator optionally replaces the data-dependent Gram matrix
//! `X_w X_w^H` by its long-grid limit `L P_w P_w^H`, which drops the payload
//! symbols from the normal equations entirely:
//! `(1/L) Y_w S_w^H P_w^H (P_w P_w^H + (lambda/L) I)^{-1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_hermitian, SvdFactors};
use crate::ofdm::SensingObservation;
use crate::tensor::{CsiAxes, CsiTensor};

/// Truncation-gap width below which least squares flags an ill-determined
/// rank decision.
const RANK_GAP_WARNING: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    LeastSquares,
    Ridge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub method: EstimatorMethod,
    /// Ridge weight; ignored by least squares.
    pub lambda: f64,
    /// Replace the payload Gram matrix by its long-grid limit.
    pub use_long_grid_gram: bool,
    /// Subcarriers to estimate; defaults to the grid's active set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_subcarriers: Option<Vec<usize>>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: EstimatorMethod::Ridge,
            lambda: 1e-2,
            use_long_grid_gram: false,
            active_subcarriers: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config(format!(
                "ridge weight must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Estimated sensing channel plus per-subcarrier diagnostics.
#[derive(Clone, Debug)]
pub struct EstimateOutput {
    /// `[N_r x N_t x W]`; subcarriers outside the active set stay zero.
    pub csi: CsiTensor,
    /// Numerical rank of `X_w` per subcarrier (0 where not estimated).
    pub subcarrier_rank: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Runs the configured estimator over every active subcarrier.
pub fn estimate(obs: &SensingObservation, cfg: &EstimatorConfig) -> Result<EstimateOutput> {
    cfg.validate()?;
    let n_rx = obs.y.rows();
    let n_tx = obs.precoder.tensor.rows();
    let w_count = obs.y.subcarriers();
    let l_total = obs.grid.n_symbols();
    let active = match &cfg.active_subcarriers {
        Some(list) => list.clone(),
        None => obs.grid.config.active_subcarriers(w_count),
    };

    let mut csi = CsiTensor::zeros(CsiAxes::RxTx, n_rx, n_tx, w_count);
    let mut subcarrier_rank = vec![0usize; w_count];
    let mut warnings = Vec::new();
    for &w in &active {
        if w >= w_count {
            return Err(Error::Shape(format!("active subcarrier {w} outside grid of {w_count}")));
        }
        let x = obs.precoder.mat(w) * obs.grid.mat(w); // N_t x L
        let y = obs.y.mat(w);
        let h_w = match cfg.method {
            EstimatorMethod::LeastSquares => {
                let svd = SvdFactors::compute(&x)?;
                subcarrier_rank[w] = svd.rank;
                if svd.rank < n_tx.min(l_total) && svd.truncation_gap < RANK_GAP_WARNING {
                    warnings.push(format!(
                        "subcarrier {w}: singular value cluster straddles the truncation \
                         threshold (gap {:.1e})",
                        svd.truncation_gap
                    ));
                }
                &y * svd.pseudo_inverse()
            }
            EstimatorMethod::Ridge => {
                let ridge_eye = |weight: f64| {
                    DMatrix::from_diagonal_element(n_tx, n_tx, Complex64::new(weight, 0.0))
                };
                let (gram, rhs) = if cfg.use_long_grid_gram {
                    let p = obs.precoder.mat(w);
                    let inv_l = 1.0 / l_total as f64;
                    (
                        &p * p.adjoint() + ridge_eye(cfg.lambda * inv_l),
                        (&y * x.adjoint()) * Complex64::new(inv_l, 0.0),
                    )
                } else {
                    (&x * x.adjoint() + ridge_eye(cfg.lambda), &y * x.adjoint())
                };
                subcarrier_rank[w] = n_tx;
                // Solve H (G + lambda I) = Y X^H through the adjoint system;
                // the Gram matrix is Hermitian positive semidefinite.
                let z = solve_hermitian(&gram, &rhs.adjoint()).map_err(|e| {
                    Error::Numerical(format!("subcarrier {w}: {e}"))
                })?;
                z.adjoint()
            }
        };
        csi.set_mat(w, &h_w);
    }
    Ok(EstimateOutput { csi, subcarrier_rank, warnings })
}

/// Divides by the largest entry modulus so the strongest tap has unit
/// magnitude. A zero tensor is returned unchanged with the flag set.
pub fn normalize_csi(t: &CsiTensor) -> (CsiTensor, bool) {
    let peak = t.max_modulus();
    if peak == 0.0 {
        return (t.clone(), true);
    }
    (t.scale(1.0 / peak), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::ofdm::{
        generate_bits, map_to_rg, transmit_and_receive, zf_precoder, GridConfig, PrecoderTensor,
        ResourceGrid,
    };
    use crate::rng::{stream, StreamDomain};
    use crate::tensor::{CsiAxes, CsiTensor};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    const W: usize = 16;

    fn grid_cfg(k: usize) -> GridConfig {
        GridConfig {
            n_streams: k,
            n_rbs: 2,
            n_guard_lower: 2,
            n_guard_upper: 2,
            ..GridConfig::default()
        }
    }

    fn random_tensor(axes: CsiAxes, r: usize, c: usize, seed: u64) -> CsiTensor {
        let mut rng = stream(seed, StreamDomain::Verify, 40);
        let mut t = CsiTensor::zeros(axes, r, c, W);
        for z in t.data.iter_mut() {
            *z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        t
    }

    /// Random downlink: K streams, N_t transmitters, N_r sensing receivers.
    fn make_link(
        k: usize,
        n_tx: usize,
        n_rx: usize,
        n0: f64,
        seed: u64,
    ) -> (CsiTensor, SensingObservation) {
        let cfg = grid_cfg(k);
        let h_comm = random_tensor(CsiAxes::UeTx, k, n_tx, seed);
        let h_sens = random_tensor(CsiAxes::RxTx, n_rx, n_tx, seed ^ 0xabcd);
        let p = zf_precoder(&h_comm, &cfg.active_subcarriers(W)).unwrap();
        let bits = generate_bits(cfg.required_bits(W), &mut stream(seed, StreamDomain::Bits, 0));
        let rg = map_to_rg(&bits, &cfg, W).unwrap();
        let mut rng = stream(seed, StreamDomain::Noise, 0);
        let obs = transmit_and_receive(&h_sens, &p, &rg, n0, &mut rng).unwrap();
        (h_sens, obs)
    }

    fn ridge_cfg(lambda: f64) -> EstimatorConfig {
        EstimatorConfig { method: EstimatorMethod::Ridge, lambda, ..EstimatorConfig::default() }
    }

    fn ls_cfg() -> EstimatorConfig {
        EstimatorConfig { method: EstimatorMethod::LeastSquares, ..EstimatorConfig::default() }
    }

    #[test]
    fn least_squares_recovers_noiseless_full_rank_channel() {
        let (h, obs) = make_link(2, 2, 3, 0.0, 50);
        let out = estimate(&obs, &ls_cfg()).unwrap();
        for &w in &obs.grid.config.active_subcarriers(W) {
            let diff = out.csi.mat(w) - h.mat(w);
            assert!(crate::linalg::fro_norm(&diff) < 1e-8, "w = {w}");
            assert_eq!(out.subcarrier_rank[w], 2);
        }
        // Estimates exist only where the grid carries energy.
        assert!(out.csi.slice(0).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn least_squares_projects_onto_excited_subspace() {
        // With fewer streams than transmit elements the noiseless estimate
        // is H times the projector onto the column space of X = P S.
        let (h, obs) = make_link(1, 3, 2, 0.0, 51);
        let out = estimate(&obs, &ls_cfg()).unwrap();
        for &w in &obs.grid.config.active_subcarriers(W) {
            let x = obs.precoder.mat(w) * obs.grid.mat(w);
            let proj = SvdFactors::compute(&x).unwrap().column_space_projector();
            let diff = out.csi.mat(w) - h.mat(w) * proj;
            assert!(crate::linalg::fro_norm(&diff) < 1e-8, "w = {w}");
            assert_eq!(out.subcarrier_rank[w], 1);
        }
    }

    #[test]
    fn ridge_estimate_minimizes_penalized_residual() {
        let lambda = 1e-2;
        let (_, obs) = make_link(2, 4, 3, 0.5, 52);
        let out = estimate(&obs, &ridge_cfg(lambda)).unwrap();
        let w = obs.grid.config.active_subcarriers(W)[3];
        let x = obs.precoder.mat(w) * obs.grid.mat(w);
        let y = obs.y.mat(w);
        let h_hat = out.csi.mat(w);
        let loss = |h: &DMatrix<Complex64>| {
            let r = &y - h * &x;
            crate::linalg::fro_norm(&r).powi(2) + lambda * crate::linalg::fro_norm(h).powi(2)
        };
        let base = loss(&h_hat);
        let mut rng = stream(52, StreamDomain::Verify, 41);
        for trial in 0..200 {
            let scale = [1e-3, 1e-1, 1.0][trial % 3];
            let d = DMatrix::from_fn(h_hat.nrows(), h_hat.ncols(), |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
            });
            assert!(loss(&(&h_hat + &d)) > base, "perturbation lowered the objective");
        }
        // First-order stationarity via a central difference.
        let eps = 1e-6;
        let d = DMatrix::from_fn(h_hat.nrows(), h_hat.ncols(), |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let d = &d / Complex64::new(crate::linalg::fro_norm(&d), 0.0);
        let slope = (loss(&(&h_hat + &d * Complex64::new(eps, 0.0)))
            - loss(&(&h_hat - &d * Complex64::new(eps, 0.0))))
            / (2.0 * eps);
        assert!(slope.abs() / base < 1e-6, "directional slope {slope:.3e} at the minimum");
    }

    #[test]
    fn ridge_norm_is_nonincreasing_in_lambda() {
        let (_, obs) = make_link(2, 4, 3, 0.2, 53);
        let mut previous = f64::INFINITY;
        for lambda in [1e-4, 1e-2, 1.0, 1e2] {
            let out = estimate(&obs, &ridge_cfg(lambda)).unwrap();
            let norm = out.csi.frobenius_norm();
            assert!(norm <= previous + 1e-12, "lambda {lambda}: {norm} > {previous}");
            previous = norm;
        }
    }

    #[test]
    fn ridge_approaches_least_squares_as_lambda_vanishes() {
        let (_, obs) = make_link(2, 2, 3, 0.1, 54);
        let ls = estimate(&obs, &ls_cfg()).unwrap();
        let ridge = estimate(&obs, &ridge_cfg(1e-12)).unwrap();
        let diff = ridge.csi.sub(&ls.csi).unwrap();
        assert!(diff.frobenius_norm() / ls.csi.frobenius_norm() < 1e-6);
    }

    #[test]
    fn estimators_commute_with_receiver_side_rotation() {
        let (_, obs) = make_link(2, 4, 4, 0.3, 55);
        let u = crate::linalg::unitary_dft(4);
        let mut rotated = obs.clone();
        for w in 0..W {
            let y_w = rotated.y.mat(w);
            rotated.y.set_mat(w, &(&u * y_w));
        }
        for cfg in [ls_cfg(), ridge_cfg(1e-2)] {
            let base = estimate(&obs, &cfg).unwrap();
            let rot = estimate(&rotated, &cfg).unwrap();
            for &w in &obs.grid.config.active_subcarriers(W) {
                let diff = rot.csi.mat(w) - &u * base.csi.mat(w);
                assert!(crate::linalg::fro_norm(&diff) < 1e-10, "{:?} w = {w}", cfg.method);
            }
        }
    }

    #[test]
    fn long_grid_gram_is_exact_on_pilot_only_grids() {
        // When every symbol is a pilot, S S^H = L I exactly and the
        // long-grid normal equations coincide with the exact ones.
        let cfg = GridConfig {
            n_streams: 2,
            n_rbs: 2,
            pilot_positions: (0..14).collect(),
            n_guard_lower: 2,
            n_guard_upper: 2,
            ..GridConfig::default()
        };
        let h_comm = random_tensor(CsiAxes::UeTx, 2, 4, 56);
        let h_sens = random_tensor(CsiAxes::RxTx, 3, 4, 57);
        let p = zf_precoder(&h_comm, &cfg.active_subcarriers(W)).unwrap();
        let rg = map_to_rg(&[], &cfg, W).unwrap();
        let mut rng = stream(58, StreamDomain::Noise, 0);
        let obs = transmit_and_receive(&h_sens, &p, &rg, 0.4, &mut rng).unwrap();
        let exact = estimate(&obs, &ridge_cfg(0.5)).unwrap();
        let long_grid = estimate(
            &obs,
            &EstimatorConfig { use_long_grid_gram: true, ..ridge_cfg(0.5) },
        )
        .unwrap();
        let diff = long_grid.csi.sub(&exact.csi).unwrap();
        assert!(diff.frobenius_norm() < 1e-10, "defect {}", diff.frobenius_norm());
    }

    #[test]
    fn zero_lambda_on_deficient_gram_is_an_error() {
        let (_, obs) = make_link(1, 3, 2, 0.1, 59);
        let err = estimate(&obs, &ridge_cfg(0.0)).unwrap_err();
        assert!(err.to_string().contains("singular"), "{err}");
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let (_, obs) = make_link(2, 2, 2, 0.0, 60);
        assert!(estimate(&obs, &ridge_cfg(-1.0)).is_err());
    }

    #[test]
    fn active_override_restricts_estimated_slices() {
        let (_, obs) = make_link(2, 2, 3, 0.0, 61);
        let cfg = EstimatorConfig { active_subcarriers: Some(vec![7]), ..ls_cfg() };
        let out = estimate(&obs, &cfg).unwrap();
        for w in 0..W {
            let energy: f64 = out.csi.slice(w).iter().map(|z| z.norm_sqr()).sum();
            if w == 7 {
                assert!(energy > 0.0);
            } else {
                assert_eq!(energy, 0.0, "w = {w}");
            }
        }
    }

    #[test]
    fn narrow_singular_gap_emits_truncation_warning() {
        // Hand-built diagonal precoder on a pilot-only grid. With four
        // streams and a pilot count divisible by four the pilot phases are
        // exact Gaussian integers and X X^H is exactly diagonal, so the
        // singular values are the diagonal entries times sqrt(L) with no
        // rounding slack. The trailing pair straddles the truncation
        // threshold sqrt(L * eps) * sigma_0 separated by 8e-11, which is
        // inside the warning width.
        let cfg = GridConfig {
            n_streams: 4,
            n_rbs: 2,
            pilot_positions: (0..14).collect(),
            n_guard_lower: 2,
            n_guard_upper: 2,
            ..GridConfig::default()
        };
        let l = cfg.n_symbols();
        let t = (l as f64 * f64::EPSILON).sqrt();
        let rg: ResourceGrid = map_to_rg(&[], &cfg, W).unwrap();
        let mut p = CsiTensor::zeros(CsiAxes::TxStream, 4, 4, W);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(t + 4e-11, 0.0),
            Complex64::new(t - 4e-11, 0.0),
        ]));
        for w in 0..W {
            p.set_mat(w, &diag);
        }
        let precoder = PrecoderTensor { tensor: p };
        let h_sens = random_tensor(CsiAxes::RxTx, 2, 4, 62);
        let mut rng = stream(63, StreamDomain::Noise, 0);
        let obs = transmit_and_receive(&h_sens, &precoder, &rg, 0.0, &mut rng).unwrap();
        let out = estimate(&obs, &ls_cfg()).unwrap();
        assert!(
            out.warnings.iter().any(|m| m.contains("truncation")),
            "warnings: {:?}",
            out.warnings
        );
        let active = obs.grid.config.active_subcarriers(W);
        assert_eq!(out.subcarrier_rank[active[0]], 3, "pair member below threshold is dropped");
    }

    #[test]
    fn normalize_rescales_peak_to_unit() {
        let t = random_tensor(CsiAxes::RxTx, 3, 4, 64);
        let (n, was_zero) = normalize_csi(&t);
        assert!(!was_zero);
        assert!((n.max_modulus() - 1.0).abs() < 1e-15);
        let zero = CsiTensor::zeros(CsiAxes::RxTx, 2, 2, 4);
        let (z, was_zero) = normalize_csi(&zero);
        assert!(was_zero);
        assert_eq!(z.max_modulus(), 0.0);
    }
}
