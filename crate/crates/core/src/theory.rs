//! Runtime checks of the ℓ1 stability theory.
//!
//! For an index set `K` and a constant `C > 1`, if every `w` in the null
//! space of `A` satisfies
//!
//! ```text
//! ‖x_K + w_K‖₁ + ‖w_K̄‖₁ / C  ≥  ‖x_K‖₁
//! ```
//!
//! then the basis pursuit solution `x̂` for `y = A·x` obeys
//!
//! ```text
//! ‖x_K‖₁ − ‖x̂_K‖₁     ≤  2/(C−1)  · ‖x_K̄‖₁
//! ‖(x − x̂)_K̄‖₁        ≤  2C/(C−1) · ‖x_K̄‖₁
//! ```
//!
//! For Gaussian `A` and `|K|/n = (1−ϖ)·μ_W`, the null-space condition holds
//! with high probability at `C = 1/√(1−ϖ)` ([`scaling_law_c`]).

use crate::error::{invalid, Result};
use crate::linalg::norm1;
use crate::sensing::DenseMatrix;
use crate::solver::{ConstraintFactor, SolverConfig};

/// `C = 1/√(1−ϖ)` for `0 ≤ ϖ < 1`.
pub fn scaling_law_c(varpi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&varpi) {
        return invalid(format!("varpi must lie in [0, 1), got {varpi}"));
    }
    Ok(1.0 / (1.0 - varpi).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCheck {
    pub c: f64,
    /// `‖x_K‖₁ − ‖x̂_K‖₁`
    pub lhs_support: f64,
    /// `2/(C−1) · ‖x_K̄‖₁`
    pub bound_support: f64,
    /// `‖(x − x̂)_K̄‖₁`
    pub lhs_tail: f64,
    /// `2C/(C−1) · ‖x_K̄‖₁`
    pub bound_tail: f64,
    pub holds: bool,
}

/// Evaluates both stability inequalities for `x̂` against `x`.
pub fn verify_stability_bounds(
    x: &[f64],
    x_hat: &[f64],
    k_set: &[usize],
    c: f64,
) -> Result<StabilityCheck> {
    if x.len() != x_hat.len() {
        return invalid("x and x_hat must have equal lengths");
    }
    if !(c > 1.0 && c.is_finite()) {
        return invalid(format!("C must exceed 1, got {c}"));
    }
    let n = x.len();
    let mut in_k = vec![false; n];
    for &i in k_set {
        if i >= n {
            return invalid(format!("index {i} outside 0..{n}"));
        }
        in_k[i] = true;
    }

    let (mut x_k, mut x_hat_k, mut x_tail, mut diff_tail) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        if in_k[i] {
            x_k += x[i].abs();
            x_hat_k += x_hat[i].abs();
        } else {
            x_tail += x[i].abs();
            diff_tail += (x[i] - x_hat[i]).abs();
        }
    }

    let lhs_support = x_k - x_hat_k;
    let bound_support = 2.0 / (c - 1.0) * x_tail;
    let lhs_tail = diff_tail;
    let bound_tail = 2.0 * c / (c - 1.0) * x_tail;
    let tol = 1e-9 * (1.0 + norm1(x));
    let holds = lhs_support <= bound_support + tol && lhs_tail <= bound_tail + tol;
    Ok(StabilityCheck { c, lhs_support, bound_support, lhs_tail, bound_tail, holds })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSpaceVerdict {
    pub holds: bool,
    /// `min over A·w = 0 of ‖x_K + w_K‖₁ + ‖w_K̄‖₁/C`
    pub min_value: f64,
    /// `‖x_K‖₁`, the value at `w = 0`.
    pub reference: f64,
}

/// Relative slack used when comparing the null-space minimum with `‖x_K‖₁`.
pub const NULL_SPACE_TOL: f64 = 1e-7;

/// Checks the null-space condition for the part of `x` on `K`.
pub fn check_null_space_condition(
    a: &DenseMatrix,
    x: &[f64],
    k_set: &[usize],
    c: f64,
    cfg: &SolverConfig,
) -> Result<NullSpaceVerdict> {
    check_null_space_condition_factored(&ConstraintFactor::new(a)?, x, k_set, c, cfg)
}

pub fn check_null_space_condition_factored(
    factor: &ConstraintFactor,
    x: &[f64],
    k_set: &[usize],
    c: f64,
    cfg: &SolverConfig,
) -> Result<NullSpaceVerdict> {
    if x.len() != factor.cols() {
        return invalid(format!("x has length {} but A has {} columns", x.len(), factor.cols()));
    }
    if let Some(&i) = k_set.iter().find(|&&i| i >= x.len()) {
        return invalid(format!("index {i} outside 0..{}", x.len()));
    }
    let x_k: Vec<f64> = k_set.iter().map(|&i| x[i]).collect();
    let reference = norm1(&x_k);
    let min_value = factor.min_over_nullspace(&x_k, k_set, c, cfg)?;
    let holds = min_value >= reference - NULL_SPACE_TOL * (1.0 + reference);
    Ok(NullSpaceVerdict { holds, min_value, reference })
}
