//! Equality-constrained ℓ1 minimization.
//!
//! [`basis_pursuit`] solves `min ‖z‖₁ s.t. A·z = y`, [`weighted_basis_pursuit`]
//! the weighted form `min Σ wᵢ|zᵢ|`, and [`min_over_nullspace`] the shifted
//! problem used by the null-space check in [`crate::theory`]. All three run the
//! same splitting scheme over a cached [`ConstraintFactor`].

mod admm;
mod crossover;
mod factor;

pub use factor::ConstraintFactor;

use crate::error::{invalid, Error, Result};
use crate::linalg::norm1;
use crate::sensing::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Initial penalty, relative to the problem normalized so that the
    /// least-norm feasible point has unit peak magnitude.
    pub penalty: f64,
    /// Residual balancing: double or halve the penalty when one residual
    /// exceeds the other tenfold.
    pub adaptive_penalty: bool,
    /// Over-relaxation factor in `(0, 2)`; `1.0` is plain splitting.
    pub relaxation: f64,
    pub polish: bool,
    /// Support threshold for polishing, relative to `max |zᵢ|`.
    pub polish_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_abs: 1e-8,
            tol_rel: 1e-8,
            max_iters: 50_000,
            penalty: 1.0,
            adaptive_penalty: true,
            relaxation: 1.0,
            polish: true,
            polish_threshold: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.tol_abs) && positive(self.tol_rel)) {
            return invalid("solver tolerances must be positive");
        }
        if !positive(self.penalty) {
            return invalid("solver penalty must be positive");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return invalid("relaxation must lie in (0, 2)");
        }
        if !positive(self.polish_threshold) {
            return invalid("polish_threshold must be positive");
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// Weighted ℓ1 norm of `solution` (plain ℓ1 for unit weights).
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    /// `‖A·solution − y‖₂`
    pub feasibility_gap: f64,
    pub converged: bool,
    pub polished: bool,
    /// Dual vector `ν` certifying optimality of a polished solution:
    /// `Aₛᵀν = w ∘ sign(solutionₛ)` on the support and `|Aⱼᵀν| ≤ wⱼ` off it.
    pub dual: Option<Vec<f64>>,
}

impl SolveReport {
    fn zero(n: usize) -> Self {
        Self {
            solution: vec![0.0; n],
            objective: 0.0,
            iterations: 0,
            primal_residual: 0.0,
            feasibility_gap: 0.0,
            converged: true,
            polished: false,
            dual: None,
        }
    }
}

impl ConstraintFactor {
    /// [`basis_pursuit`] over this factorization.
    pub fn basis_pursuit(&self, y: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
        let ones = vec![1.0; self.cols()];
        self.weighted_basis_pursuit(y, &ones, cfg)
    }

    /// [`weighted_basis_pursuit`] over this factorization.
    ///
    /// The weights enter through the proximal step (threshold `wᵢ/ρ`), so
    /// the same factorization of `A·Aᵀ` serves every weight vector. This
    /// has the same minimizers as substituting `z' = D·z` and running plain
    /// basis pursuit on `A·D⁻¹`.
    pub fn weighted_basis_pursuit(
        &self,
        y: &[f64],
        weights: &[f64],
        cfg: &SolverConfig,
    ) -> Result<SolveReport> {
        self.check_weighted(y, weights, cfg)?;
        Ok(admm::solve(self, y, weights, cfg, None))
    }

    /// As [`ConstraintFactor::weighted_basis_pursuit`], starting from a
    /// feasible point `start` (typically the solution for other weights).
    pub(crate) fn weighted_basis_pursuit_from(
        &self,
        y: &[f64],
        weights: &[f64],
        cfg: &SolverConfig,
        start: &[f64],
    ) -> Result<SolveReport> {
        self.check_weighted(y, weights, cfg)?;
        if start.len() != self.cols() {
            return invalid(format!("start has length {} but A has {} columns", start.len(), self.cols()));
        }
        Ok(admm::solve(self, y, weights, cfg, Some(start)))
    }

    fn check_weighted(&self, y: &[f64], weights: &[f64], cfg: &SolverConfig) -> Result<()> {
        cfg.validate()?;
        if y.len() != self.rows() {
            return invalid(format!("y has length {} but A has {} rows", y.len(), self.rows()));
        }
        if weights.len() != self.cols() {
            return invalid(format!(
                "weights have length {} but A has {} columns",
                weights.len(),
                self.cols()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return invalid(format!("weights must be positive and finite, found {w}"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("y must be finite");
        }
        Ok(())
    }

    /// [`min_over_nullspace`] over this factorization.
    pub fn min_over_nullspace(
        &self,
        x_k: &[f64],
        k_set: &[usize],
        c: f64,
        cfg: &SolverConfig,
    ) -> Result<f64> {
        if !(c > 1.0 && c.is_finite()) {
            return invalid(format!("C must exceed 1, got {c}"));
        }
        if x_k.len() != k_set.len() {
            return invalid("x_K and K must have the same length");
        }
        let n = self.cols();
        let mut shift = vec![0.0; n];
        let mut weights = vec![1.0 / c; n];
        for (&i, &v) in k_set.iter().zip(x_k) {
            if i >= n {
                return invalid(format!("index {i} outside 0..{n}"));
            }
            shift[i] = v;
            weights[i] = 1.0;
        }
        // Substituting v = shift + w turns the objective into Σ cᵢ|vᵢ| with
        // c = 1 on K, 1/C elsewhere, and A·w = 0 into A·v = A·shift.
        let b = self.matrix().mul_vec(&shift)?;
        let report = self.weighted_basis_pursuit(&b, &weights, cfg)?;
        if !report.converged {
            return Err(Error::Numerical(format!(
                "null-space minimization did not converge in {} iterations",
                report.iterations
            )));
        }
        let upper = norm1(x_k);
        let slack = 1e-6 * (1.0 + upper);
        if report.objective > upper + slack {
            return Err(Error::Numerical(format!(
                "null-space minimum {} exceeds the feasible value {upper}",
                report.objective
            )));
        }
        Ok(report.objective.min(upper))
    }
}

/// `min ‖z‖₁ s.t. A·z = y`.
pub fn basis_pursuit(a: &DenseMatrix, y: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    ConstraintFactor::new(a)?.basis_pursuit(y, cfg)
}

/// `min Σ wᵢ|zᵢ| s.t. A·z = y` with all `wᵢ > 0`.
pub fn weighted_basis_pursuit(
    a: &DenseMatrix,
    y: &[f64],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    ConstraintFactor::new(a)?.weighted_basis_pursuit(y, weights, cfg)
}

/// `min over {w : A·w = 0} of ‖x_K + w_K‖₁ + ‖w_K̄‖₁ / C`.
///
/// Never exceeds `‖x_K‖₁`, the value at `w = 0`.
pub fn min_over_nullspace(
    a: &DenseMatrix,
    x_k: &[f64],
    k_set: &[usize],
    c: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    ConstraintFactor::new(a)?.min_over_nullspace(x_k, k_set, c, cfg)
}
