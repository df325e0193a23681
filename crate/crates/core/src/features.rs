//! CSI-to-image feature maps and reference fusion.
//!
//! Estimated channels are turned into real-valued tensors the CNN can
//! consume, either as angle-delay magnitude maps (unitary DFTs across both
//! array axes, unitary inverse DFT across subcarrier fibers, then modulus) or
//! as raw real/imaginary planes stacked along the subcarrier axis. A
//! reference tensor computed from the target-free channel can be subtracted
//! or stacked to expose what a target changed.

use ndarray::{Array3, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::linalg::{solve_hermitian, unitary_dft};
use crate::ofdm::{GridConfig, PrecoderTensor};
use crate::tensor::CsiTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Angle-delay magnitude maps.
    BeamDelay,
    /// Real and imaginary parts stacked along the subcarrier axis.
    Direct,
}

/// How the estimate and the target-free reference are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Estimate minus reference.
    Sub,
    /// Estimate and reference stacked along the channel axis.
    Sta,
    /// Estimate alone.
    Nor,
}

/// Real feature tensor `[N_r x C x W']`. Axis 1 indexes CNN input channels;
/// each channel is an `N_r x W'` image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    pub data: Array3<f64>,
    pub kind: FeatureKind,
}

impl FeatureTensor {
    pub fn n_channels(&self) -> usize {
        self.data.shape()[1]
    }

    /// Image height and width seen by the CNN.
    pub fn map_shape(&self) -> (usize, usize) {
        (self.data.shape()[0], self.data.shape()[2])
    }

    /// Channels-first copy `[C x N_r x W']` for the CNN.
    pub fn to_cnn_input(&self) -> Array3<f64> {
        let (n_rows, n_ch, width) = (self.data.shape()[0], self.data.shape()[1], self.data.shape()[2]);
        Array3::from_shape_fn((n_ch, n_rows, width), |(c, i, w)| self.data[[i, c, w]])
    }
}

/// Angle-delay magnitude features.
///
/// Each subcarrier slice is transformed on both array sides by unitary DFT
/// matrices, then every `(beam, beam)` fiber across subcarriers is taken to
/// the delay domain by a unitary inverse DFT; the output is the entrywise
/// modulus. All three transforms are unitary, so total energy equals the
/// squared Frobenius norm of the input and any global phase drops out.
pub fn beam_delay_features(h: &CsiTensor) -> FeatureTensor {
    let (n_rx, n_tx, w_count) = (h.rows(), h.cols(), h.subcarriers());
    let f_rx = unitary_dft(n_rx);
    let f_tx = unitary_dft(n_tx);
    let mut beam = Array3::<Complex64>::zeros((n_rx, n_tx, w_count));
    for w in 0..w_count {
        let b = &f_rx * h.mat(w) * &f_tx;
        for i in 0..n_rx {
            for j in 0..n_tx {
                beam[[i, j, w]] = b[(i, j)];
            }
        }
    }
    let f_w = unitary_dft(w_count);
    let mut out = Array3::<f64>::zeros((n_rx, n_tx, w_count));
    for i in 0..n_rx {
        for j in 0..n_tx {
            for d in 0..w_count {
                let mut acc = Complex64::new(0.0, 0.0);
                for w in 0..w_count {
                    acc += f_w[(w, d)].conj() * beam[[i, j, w]];
                }
                out[[i, j, d]] = acc.norm();
            }
        }
    }
    FeatureTensor { data: out, kind: FeatureKind::BeamDelay }
}

/// Real and imaginary parts side by side: `[N_r x N_t x 2W]` with the real
/// plane in subcarrier slots `0..W` and the imaginary plane in `W..2W`.
pub fn direct_features(h: &CsiTensor) -> FeatureTensor {
    let (n_rx, n_tx, w_count) = (h.rows(), h.cols(), h.subcarriers());
    let mut out = Array3::<f64>::zeros((n_rx, n_tx, 2 * w_count));
    for i in 0..n_rx {
        for j in 0..n_tx {
            for w in 0..w_count {
                let z = h.data[[i, j, w]];
                out[[i, j, w]] = z.re;
                out[[i, j, w_count + w]] = z.im;
            }
        }
    }
    FeatureTensor { data: out, kind: FeatureKind::Direct }
}

/// What the ridge estimator returns for a known channel observed without
/// noise: `H_w G_w (G_w + lambda I)^{-1}` with `G_w = X_w X_w^H`. Used as a
/// closed-form cross-check for the reference branch, which runs the actual
/// estimator on a noiseless synthetic observation.
pub fn ridge_response_closed_form(
    h_ref: &CsiTensor,
    precoder: &PrecoderTensor,
    grid_cfg: &GridConfig,
    grid: &crate::ofdm::ResourceGrid,
    est_cfg: &EstimatorConfig,
) -> Result<CsiTensor> {
    est_cfg.validate()?;
    let (n_rx, n_tx, w_count) = (h_ref.rows(), h_ref.cols(), h_ref.subcarriers());
    let _ = n_rx;
    let active = match &est_cfg.active_subcarriers {
        Some(list) => list.clone(),
        None => grid_cfg.active_subcarriers(w_count),
    };
    let mut out = CsiTensor::zeros(h_ref.axes, h_ref.rows(), n_tx, w_count);
    for &w in &active {
        let x = precoder.mat(w) * grid.mat(w);
        let gram = &x * x.adjoint();
        let ridge = &gram
            + nalgebra::DMatrix::from_diagonal_element(
                n_tx,
                n_tx,
                Complex64::new(est_cfg.lambda, 0.0),
            );
        let rhs = &gram * h_ref.mat(w).adjoint();
        let z = solve_hermitian(&ridge, &rhs)
            .map_err(|e| Error::Numerical(format!("subcarrier {w}: {e}")))?;
        out.set_mat(w, &z.adjoint());
    }
    Ok(out)
}

/// Combines estimate and reference features.
///
/// `Sub` and `Sta` require a reference of matching kind; `Nor` ignores it.
pub fn fuse(
    estimate: FeatureTensor,
    reference: Option<&FeatureTensor>,
    fusion: Fusion,
) -> Result<FeatureTensor> {
    match fusion {
        Fusion::Nor => Ok(estimate),
        Fusion::Sub | Fusion::Sta => {
            let reference = reference.ok_or_else(|| {
                Error::Config(format!("{fusion:?} fusion needs a reference tensor"))
            })?;
            if reference.kind != estimate.kind {
                return Err(Error::Config(format!(
                    "cannot fuse {:?} features with a {:?} reference",
                    estimate.kind, reference.kind
                )));
            }
            if reference.data.shape() != estimate.data.shape() {
                return Err(Error::Shape(format!(
                    "estimate {:?} and reference {:?} shapes differ",
                    estimate.data.shape(),
                    reference.data.shape()
                )));
            }
            match fusion {
                Fusion::Sub => Ok(FeatureTensor {
                    data: &estimate.data - &reference.data,
                    kind: estimate.kind,
                }),
                Fusion::Sta => {
                    let data = ndarray::concatenate(
                        Axis(1),
                        &[estimate.data.view(), reference.data.view()],
                    )
                    .expect("matching shapes were checked above");
                    Ok(FeatureTensor { data, kind: estimate.kind })
                }
                Fusion::Nor => unreachable!(),
            }
        }
    }
}
