//! Gaussian sensing matrices and the column-weighted product `A·W`.
//!
//! `W` is a random diagonal with no zero entries. Multiplying the columns of
//! an i.i.d. Gaussian `A` by `W` breaks the near-equal column norms of `A`;
//! the decoder then works on the unknown `W·x`, whose nonzeros are no longer
//! constant-modulus even when those of `x` are.

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::sampling::{standard_normal, RandomStream};

/// Redraw floor for the weight diagonal.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Real `rows × cols` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("matrix shape {rows}x{cols} has a zero dimension"));
        }
        if data.len() != rows * cols {
            return invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `A·x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return invalid(format!("A·x: A has {} columns, x has length {}", self.cols, x.len()));
        }
        Ok(self.data.chunks_exact(self.cols).map(|row| linalg::dot(row, x)).collect())
    }

    /// `Aᵀ·y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return invalid(format!("Aᵀ·y: A has {} rows, y has length {}", self.rows, y.len()));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            linalg::axpy(yi, row, &mut out);
        }
        Ok(out)
    }

    /// Matrix with the given columns scaled by `scale[j]`.
    pub(crate) fn scale_columns(&self, scale: &[f64]) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.cols) {
            for (v, s) in row.iter_mut().zip(scale) {
                *v *= s;
            }
        }
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Nonzero diagonal `W`, stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDiagonal {
    weights: Vec<f64>,
}

impl WeightDiagonal {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("weight diagonal must be non-empty");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || w.abs() < WEIGHT_FLOOR) {
            return invalid(format!("weight {w} is below the floor {WEIGHT_FLOOR} or not finite"));
        }
        Ok(Self { weights })
    }

    pub fn ones(n: usize) -> Self {
        Self { weights: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// `m × n` matrix with i.i.d. N(0,1) entries, drawn row by row.
pub fn gen_gaussian_matrix(m: usize, n: usize, stream: &mut RandomStream) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return invalid(format!("gaussian matrix shape {m}x{n} has a zero dimension"));
    }
    let data = (0..m * n).map(|_| standard_normal(stream)).collect();
    DenseMatrix::new(m, n, data)
}

/// Draws the diagonal of `W` from N(0,1), redrawing any entry below
/// [`WEIGHT_FLOOR`] in magnitude. Also returns the number of redraws.
pub fn gen_weight_diagonal_counted(
    n: usize,
    stream: &mut RandomStream,
) -> Result<(WeightDiagonal, usize)> {
    if n == 0 {
        return invalid("weight diagonal length must be at least 1");
    }
    let mut redraws = 0;
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        let mut w = standard_normal(stream);
        while w.abs() < WEIGHT_FLOOR {
            redraws += 1;
            w = standard_normal(stream);
        }
        weights.push(w);
    }
    Ok((WeightDiagonal { weights }, redraws))
}

pub fn gen_weight_diagonal(n: usize, stream: &mut RandomStream) -> Result<WeightDiagonal> {
    gen_weight_diagonal_counted(n, stream).map(|(w, _)| w)
}

/// `A·W`: column `j` of `A` multiplied by `w[j]`.
pub fn apply_column_weights(a: &DenseMatrix, w: &WeightDiagonal) -> Result<DenseMatrix> {
    if a.cols() != w.len() {
        return invalid(format!("A has {} columns but W has length {}", a.cols(), w.len()));
    }
    Ok(a.scale_columns(w.as_slice()))
}

/// `W·x`
pub fn apply_forward(x: &[f64], w: &WeightDiagonal) -> Result<Vec<f64>> {
    if x.len() != w.len() {
        return invalid(format!("x has length {} but W has length {}", x.len(), w.len()));
    }
    Ok(x.iter().zip(w.as_slice()).map(|(xi, wi)| xi * wi).collect())
}

/// `W⁻¹·x`
pub fn apply_inverse_weights(x: &[f64], w: &WeightDiagonal) -> Result<Vec<f64>> {
    if x.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "x has length {} but W has length {}",
            x.len(),
            w.len()
        )));
    }
    Ok(x.iter().zip(w.as_slice()).map(|(xi, wi)| xi / wi).collect())
}
