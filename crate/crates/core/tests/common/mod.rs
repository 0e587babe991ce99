#![allow(dead_code)]

pub mod lp_oracle;

use nics::sampling::{derive_stream, SeedSpec};
use nics::sensing::{gen_gaussian_matrix, DenseMatrix};
use nics::signals::{gen_sparse_signal, AmplitudeModel};

/// Gaussian `m × n` matrix from the stream at `(seed, [case, 0])`.
pub fn matrix(seed: u64, case: u32, m: usize, n: usize) -> DenseMatrix {
    gen_gaussian_matrix(m, n, &mut derive_stream(&SeedSpec::new(seed, vec![case, 0]))).unwrap()
}

/// k-sparse dense vector from the stream at `(seed, [case, 1])`.
pub fn sparse(seed: u64, case: u32, n: usize, k: usize, model: AmplitudeModel) -> Vec<f64> {
    gen_sparse_signal(n, k, model, &mut derive_stream(&SeedSpec::new(seed, vec![case, 1])))
        .unwrap()
        .densify()
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Column weights from the stream at `(seed, [case, 2])`.
pub fn weights(seed: u64, case: u32, n: usize) -> nics::sensing::WeightDiagonal {
    nics::sensing::gen_weight_diagonal(n, &mut derive_stream(&SeedSpec::new(seed, vec![case, 2]))).unwrap()
}

/// Standard normal vector from the stream at `(seed, path)`.
pub fn gaussian(seed: u64, path: Vec<u32>, len: usize) -> Vec<f64> {
    nics::sampling::sample_gaussian(&mut derive_stream(&SeedSpec::new(seed, path)), len).unwrap()
}
