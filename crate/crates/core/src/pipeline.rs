//! Two-stage reweighted ℓ1 recovery for column-weighted sensing, and the
//! plain ℓ1 baseline.
//!
//! Measurements are `y = A·W·x_true`. Writing `x = W·x_true`, the decoder
//! sees `y = A·x` where `x` has the support of `x_true` but nonzeros that
//! are products of Gaussians and the original amplitudes. The two stages
//! work on `x`:
//!
//! 1. `x̂ = argmin ‖z‖₁ s.t. A·z = y`
//! 2. `L` = indices of the `k` largest `|x̂ᵢ|`
//! 3. `x̃ = argmin ‖z_L‖₁ + ω‖z_L̄‖₁ s.t. A·z = y`
//! 4. `x* = W⁻¹·x̃`

use crate::error::{invalid, Result};
use crate::sensing::{apply_inverse_weights, DenseMatrix, WeightDiagonal};
use crate::signals::{supp_k, support_overlap};
use crate::solver::{ConstraintFactor, SolveReport, SolverConfig};

pub const DEFAULT_OMEGA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    /// Penalty on entries outside the estimated support, `> 1`.
    pub omega: f64,
    /// Sparsity of the unknown signal (or an upper bound on it).
    pub k: usize,
    pub solver: SolverConfig,
}

impl RecoveryConfig {
    pub fn new(k: usize) -> Self {
        Self { omega: DEFAULT_OMEGA, k, solver: SolverConfig::default() }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn validate(&self) -> Result<()> {
        // ω = 1 is accepted: it degenerates stage 3 into stage 1, which is a
        // useful consistency check. Values below 1 reward leaving L.
        if !(self.omega >= 1.0 && self.omega.is_finite()) {
            return invalid(format!("omega must be at least 1, got {}", self.omega));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    /// Final estimate of `x_true`.
    pub x_star: Vec<f64>,
    /// Stage-1 estimate of `x = W·x_true`.
    pub x_hat: Vec<f64>,
    /// Stage-3 estimate of `x`.
    pub x_tilde: Vec<f64>,
    /// Estimated support, `|L| = k`, ascending.
    pub support_estimate: Vec<usize>,
    /// `|supp(x_true) ∩ L| / |supp(x_true)|`, when the truth is supplied.
    pub overlap: Option<f64>,
    pub stage_reports: [SolveReport; 2],
}

impl RecoveryOutcome {
    /// Both stages converged.
    pub fn converged(&self) -> bool {
        self.stage_reports.iter().all(|r| r.converged)
    }

    /// Fills [`RecoveryOutcome::overlap`] against the true support.
    pub fn score_support(&mut self, truth: &[usize]) -> Result<f64> {
        let overlap = support_overlap(truth, &self.support_estimate)?;
        self.overlap = Some(overlap);
        Ok(overlap)
    }
}

/// Runs the two-stage recovery with a prebuilt factorization of `A`.
pub fn recover_two_stage_factored(
    factor: &ConstraintFactor,
    w: &WeightDiagonal,
    y: &[f64],
    cfg: &RecoveryConfig,
) -> Result<RecoveryOutcome> {
    cfg.validate()?;
    let n = factor.cols();
    if w.len() != n {
        return invalid(format!("W has length {} but A has {n} columns", w.len()));
    }
    if cfg.k > n {
        return invalid(format!("k = {} exceeds n = {n}", cfg.k));
    }

    let stage1 = factor.basis_pursuit(y, &cfg.solver)?;
    let support_estimate = supp_k(&stage1.solution, cfg.k)?;

    let mut weights = vec![cfg.omega; n];
    for &i in &support_estimate {
        weights[i] = 1.0;
    }
    let stage3 = factor.weighted_basis_pursuit_from(y, &weights, &cfg.solver, &stage1.solution)?;
    let x_star = apply_inverse_weights(&stage3.solution, w)?;

    Ok(RecoveryOutcome {
        x_star,
        x_hat: stage1.solution.clone(),
        x_tilde: stage3.solution.clone(),
        support_estimate,
        overlap: None,
        stage_reports: [stage1, stage3],
    })
}

/// Two-stage recovery from `y = A·W·x_true`, given `A` and `W` separately.
pub fn recover_two_stage(
    a: &DenseMatrix,
    w: &WeightDiagonal,
    y: &[f64],
    cfg: &RecoveryConfig,
) -> Result<RecoveryOutcome> {
    recover_two_stage_factored(&ConstraintFactor::new(a)?, w, y, cfg)
}

/// Plain ℓ1 recovery: the basis pursuit solution for `A_sense`.
pub fn recover_plain(a_sense: &DenseMatrix, y: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    Ok(crate::solver::basis_pursuit(a_sense, y, cfg)?.solution)
}
