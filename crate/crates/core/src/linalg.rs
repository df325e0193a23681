//! Small dense complex linear algebra on top of nalgebra.
//!
//! Per-subcarrier matrices in this pipeline are tiny (at most a few hundred
//! columns), so everything here favors clarity and explicit numerical policy
//! over speed: SVD-based pseudo-inverses with a documented truncation rule,
//! Hermitian solves via Cholesky with an eigendecomposition fallback, and
//! dense unitary DFT matrices.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// SVD of a matrix `M = U diag(sigma) V^H` together with the effective rank
/// under the truncation rule `sigma_k > sqrt(max(nrows, ncols) * eps) * sigma_0`.
///
/// The factorization goes through a Hermitian eigendecomposition of the Gram
/// matrix on the shorter side rather than nalgebra's bidiagonal SVD: the
/// latter returns orthonormal factors that fail to reconstruct rank-deficient
/// complex matrices (the per-subcarrier pilot blocks here are exactly that
/// shape). The Gram route is accurate to machine precision down to singular
/// values around `sqrt(eps) * sigma_0`, which is why the truncation threshold
/// carries the square root. Factor columns past the effective rank are an
/// orthonormal null-space basis on the Gram side and zero on the derived
/// side; only the first `rank` columns participate in any computation here.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<Complex64>,
    pub rank: usize,
    /// Relative gap `(sigma_{r-1} - sigma_r) / sigma_0` at the truncation
    /// point; tiny values flag an ambiguous numerical rank.
    pub truncation_gap: f64,
}

impl SvdFactors {
    /// Thin SVD with the default truncation rule.
    pub fn compute(m: &DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = (m.nrows(), m.ncols());
        if rows == 0 || cols == 0 {
            return Err(Error::Numerical("cannot factor an empty matrix".into()));
        }
        let wide = cols >= rows;
        let small = rows.min(cols);
        let gram = if wide { m * m.adjoint() } else { m.adjoint() * m };
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..small).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let sigma: Vec<f64> =
            order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
        let basis =
            DMatrix::from_fn(small, small, |i, j| eig.eigenvectors[(i, order[j])]);

        let sigma0 = sigma[0];
        let tol = (rows.max(cols) as f64 * f64::EPSILON).sqrt() * sigma0;
        let rank = sigma.iter().filter(|&&s| s > tol).count();
        let truncation_gap = if rank == 0 || rank == sigma.len() {
            f64::INFINITY
        } else {
            (sigma[rank - 1] - sigma[rank]) / sigma0
        };

        let long = rows.max(cols);
        let mut derived = DMatrix::<Complex64>::zeros(long, small);
        for k in 0..rank {
            let bk = basis.column(k);
            let mut col = vec![Complex64::new(0.0, 0.0); long];
            for (i, c) in col.iter_mut().enumerate() {
                for r in 0..small {
                    // derived_k = M^H u_k / sigma_k (wide) or M v_k / sigma_k.
                    *c += if wide { m[(r, i)].conj() * bk[r] } else { m[(i, r)] * bk[r] };
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (i, c) in col.into_iter().enumerate() {
                derived[(i, k)] = c / norm;
            }
        }
        let (u, v) = if wide { (basis, derived) } else { (derived, basis) };
        Ok(Self { u, singular_values: sigma, v, rank, truncation_gap })
    }

    /// Moore-Penrose pseudo-inverse truncated at the effective rank.
    pub fn pseudo_inverse(&self) -> DMatrix<Complex64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut out = DMatrix::zeros(n, m);
        for k in 0..self.rank {
            let uk = self.u.column(k);
            let vk = self.v.column(k);
            let inv_s = Complex64::new(1.0 / self.singular_values[k], 0.0);
            for i in 0..n {
                for j in 0..m {
                    out[(i, j)] += vk[i] * inv_s * uk[j].conj();
                }
            }
        }
        out
    }

    /// Orthogonal projector `sum_{k<rank} u_k u_k^H` onto the column space.
    pub fn column_space_projector(&self) -> DMatrix<Complex64> {
        let m = self.u.nrows();
        let mut out = DMatrix::zeros(m, m);
        for k in 0..self.rank {
            let uk = self.u.column(k);
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] += uk[i] * uk[j].conj();
                }
            }
        }
        out
    }

    /// Ratio of largest to smallest retained singular value.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.rank) {
            (Some(&s0), r) if r > 0 => s0 / self.singular_values[r - 1],
            _ => f64::INFINITY,
        }
    }

    /// Largest deviation of `U^H U` and `V^H V` from the identity over the
    /// retained columns.
    pub fn unitarity_defect(&self) -> f64 {
        let defect = |m: &DMatrix<Complex64>| {
            let mut worst: f64 = 0.0;
            for i in 0..self.rank {
                for j in 0..self.rank {
                    let dot: Complex64 =
                        (0..m.nrows()).map(|r| m[(r, i)].conj() * m[(r, j)]).sum();
                    let target =
                        if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                    worst = worst.max((dot - target).norm());
                }
            }
            worst
        };
        defect(&self.u).max(defect(&self.v))
    }
}

/// Solves `A X = B` for Hermitian positive definite `A` by Cholesky, falling
/// back to an eigendecomposition when the factorization fails. Errors when the
/// smallest eigenvalue is indistinguishable from zero.
pub fn solve_hermitian(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(chol.solve(b));
    }
    let eig = SymmetricEigen::new(a.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let tol = a.nrows() as f64 * f64::EPSILON * max_eig;
    if eig.eigenvalues.iter().any(|&l| l <= tol) {
        return Err(Error::Numerical(
            "Hermitian system is singular to working precision".into(),
        ));
    }
    let q = &eig.eigenvectors;
    let mut y = q.adjoint() * b;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        for j in 0..y.ncols() {
            y[(i, j)] /= Complex64::new(l, 0.0);
        }
    }
    Ok(q * y)
}

/// Unitary DFT matrix `F[j, k] = exp(-2*pi*i*j*k/n) / sqrt(n)`.
pub fn unitary_dft(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        let phase = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance of a square matrix from the identity.
pub fn identity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            acc += (m[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}
