//! Complex third-order tensors with explicit axis semantics.
//!
//! Everything frequency-resolved in the pipeline is stored as an
//! `Array3<Complex64>` whose last axis indexes subcarriers; the first two axes
//! are documented by a [`CsiAxes`] tag so a receive-side channel cannot be
//! silently fed where a precoder belongs.

use nalgebra::DMatrix;
use ndarray::{Array3, ArrayView2, ArrayViewMut2, Axis, s};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Meaning of the first two axes of a [`CsiTensor`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiAxes {
    /// rows: receive elements, cols: transmit elements (sensing channel).
    RxTx,
    /// rows: user terminals, cols: transmit elements (communication channel).
    UeTx,
    /// rows: transmit elements, cols: spatial streams (precoder).
    TxStream,
    /// rows: receive elements, cols: OFDM symbols (received signal).
    RxTime,
}

/// Complex tensor `[rows x cols x subcarriers]` with tagged axis semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiTensor {
    pub data: Array3<Complex64>,
    pub axes: CsiAxes,
}

impl CsiTensor {
    pub fn zeros(axes: CsiAxes, rows: usize, cols: usize, subcarriers: usize) -> Self {
        Self { data: Array3::zeros((rows, cols, subcarriers)), axes }
    }

    pub fn rows(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn cols(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn subcarriers(&self) -> usize {
        self.data.shape()[2]
    }

    /// Frontal slice at subcarrier `w` as a view.
    pub fn slice(&self, w: usize) -> ArrayView2<'_, Complex64> {
        self.data.slice(s![.., .., w])
    }

    /// Frontal slice at subcarrier `w` copied into a nalgebra matrix.
    pub fn mat(&self, w: usize) -> DMatrix<Complex64> {
        let v = self.slice(w);
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[[i, j]])
    }

    /// Writes a nalgebra matrix into the frontal slice at subcarrier `w`.
    pub fn set_mat(&mut self, w: usize, m: &DMatrix<Complex64>) {
        let mut v: ArrayViewMut2<'_, Complex64> = self.data.slice_mut(s![.., .., w]);
        assert_eq!((v.nrows(), v.ncols()), (m.nrows(), m.ncols()), "slice shape mismatch");
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v[[i, j]] = m[(i, j)];
            }
        }
    }

    /// Largest entry modulus over the whole tensor.
    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm over the whole tensor.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise scaling by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        Self { data: self.data.mapv(|z| z * factor), axes: self.axes }
    }

    /// Errors unless the tensor has the expected axis tag and shape.
    pub fn expect(&self, axes: CsiAxes, rows: usize, cols: usize, subcarriers: usize) -> Result<()> {
        if self.axes != axes {
            return Err(Error::Shape(format!("expected {:?} tensor, got {:?}", axes, self.axes)));
        }
        let got = (self.rows(), self.cols(), self.subcarriers());
        if got != (rows, cols, subcarriers) {
            return Err(Error::Shape(format!(
                "expected {axes:?} shape ({rows}, {cols}, {subcarriers}), got {got:?}"
            )));
        }
        Ok(())
    }

    /// Per-subcarrier transpose (rows and cols swapped, slices transposed).
    pub fn transposed(&self, axes: CsiAxes) -> Self {
        let mut out = Array3::zeros((self.cols(), self.rows(), self.subcarriers()));
        for ((i, j, w), z) in self.data.indexed_iter() {
            out[[j, i, w]] = *z;
        }
        Self { data: out, axes }
    }

    /// Sum of two tensors with matching axes and shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        other.expect(self.axes, self.rows(), self.cols(), self.subcarriers())?;
        Ok(Self { data: &self.data + &other.data, axes: self.axes })
    }

    /// Difference of two tensors with matching axes and shape.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.expect(self.axes, self.rows(), self.cols(), self.subcarriers())?;
        Ok(Self { data: &self.data - &other.data, axes: self.axes })
    }

    /// Iterator over subcarrier indices.
    pub fn subcarrier_range(&self) -> std::ops::Range<usize> {
        0..self.subcarriers()
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Tube fiber `[i, j, :]` along the subcarrier axis.
    pub fn fiber(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.data.index_axis(Axis(0), i).row(j).to_vec()
    }
}
