use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::sensing::DenseMatrix;

/// Cached factorization of the constraint `A·z = y`.
///
/// With `A·Aᵀ = L·Lᵀ`, the whitened operator `Q = L⁻¹·A` has orthonormal
/// rows, so the Euclidean projection onto `{z : A·z = y}` becomes
/// `v − Qᵀ(Q·v − L⁻¹·y)`: two dense products per projection and no
/// triangular solves inside the iteration. Build once per matrix and share
/// it read-only between solves.
#[derive(Debug, Clone)]
pub struct ConstraintFactor {
    a: DenseMatrix,
    chol_l: DMatrix<f64>,
    // Q = L⁻¹A, row-major m × n
    q: Vec<f64>,
}

impl ConstraintFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m > n {
            return invalid(format!("constraint matrix {m}x{n} has more rows than columns"));
        }
        let a_na = a.to_nalgebra();
        let gram = &a_na * a_na.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Numerical("A·Aᵀ is not positive definite (A is rank deficient)".into()))?;
        let l = chol.l();
        let diag_max = l.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let diag_min = l.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if !(diag_min > 1e-10 * diag_max) {
            return Err(Error::Numerical(format!(
                "A·Aᵀ is numerically singular (Cholesky pivot ratio {:.3e})",
                diag_min / diag_max
            )));
        }
        let q_na = l
            .solve_lower_triangular(&a_na)
            .ok_or_else(|| Error::Numerical("triangular solve failed while whitening A".into()))?;
        let q = q_na.transpose().as_slice().to_vec();
        Ok(Self { a: a.clone(), chol_l: l, q })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub(crate) fn q_row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.q[i * n..(i + 1) * n]
    }

    /// `L⁻¹·y`
    pub(crate) fn whiten(&self, y: &[f64]) -> Vec<f64> {
        let rhs = nalgebra::DVector::from_column_slice(y);
        self.chol_l
            .solve_lower_triangular(&rhs)
            .map(|v| v.as_slice().to_vec())
            .unwrap_or_else(|| vec![f64::NAN; y.len()])
    }

    /// `L⁻ᵀ·v`: maps a whitened dual vector back to the original constraints.
    pub(crate) fn unwhiten_dual(&self, v: &[f64]) -> Vec<f64> {
        let rhs = nalgebra::DVector::from_column_slice(v);
        self.chol_l
            .tr_solve_lower_triangular(&rhs)
            .map(|v| v.as_slice().to_vec())
            .unwrap_or_else(|| vec![f64::NAN; v.len()])
    }

    /// `out = Q·v`
    pub(crate) fn q_mul(&self, v: &[f64], out: &mut [f64]) {
        let n = self.cols();
        for (o, row) in out.iter_mut().zip(self.q.chunks_exact(n)) {
            *o = linalg::dot(row, v);
        }
    }

    /// `out = Qᵀ·t`
    pub(crate) fn q_tr_mul(&self, t: &[f64], out: &mut [f64]) {
        let n = self.cols();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &ti) in self.q.chunks_exact(n).zip(t) {
            linalg::axpy(ti, row, out);
        }
    }

    /// Projects `v` in place onto `{z : Q·z = y_white}`.
    pub(crate) fn project(&self, v: &mut [f64], y_white: &[f64], scratch: &mut [f64]) {
        let n = self.cols();
        for ((s, row), yi) in scratch.iter_mut().zip(self.q.chunks_exact(n)).zip(y_white) {
            *s = linalg::dot(row, v) - yi;
        }
        for (row, &si) in self.q.chunks_exact(n).zip(scratch.iter()) {
            linalg::axpy(-si, row, v);
        }
    }
}
