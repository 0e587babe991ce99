//! Douglas–Rachford splitting for `min Σ wᵢ|zᵢ|  s.t.  A·z = y`.
//!
//! The x-step projects onto the affine constraint set, the z-step is the
//! weighted soft-threshold. Once the thresholded support stops moving the
//! solver refits on it by least squares and tries to certify optimality of
//! the refit with a dual vector built from the splitting's multiplier.

use nalgebra::DMatrix;

use std::cell::RefCell;

use super::crossover::{crossover, Crossover, Stalled};
use super::factor::ConstraintFactor;
use super::{SolveReport, SolverConfig};
use crate::linalg::{dist2, norm2};

// Slack allowed on the off-support dual constraints |Aⱼᵀν| ≤ wⱼ.
const CERT_TOL: f64 = 1e-9;
// Certificate search: rounds, how far inside the dual box the off-support
// correlations are pulled, and the over-relaxation of that step.
const CERT_ROUNDS: usize = 100;
const CERT_MARGIN: f64 = 1e-4;
const CERT_RELAXATION: f64 = 1.8;
const POLISH_FEASIBILITY: f64 = 1e-10;
const POLISH_OBJECTIVE: f64 = 1e-9;
const CHECK_EVERY: usize = 10;
const MAX_PIVOTS: usize = 50;
const BALANCE_EVERY: usize = 10;
const FIRST_BACKOFF: usize = 20;
const MAX_BACKOFF: usize = 640;
// Iteration at which a refit is attempted even if the support still moves.
const FIRST_FORCED: usize = 800;

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn weighted_l1(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(v, wi)| wi * v.abs()).sum()
}

enum DualHint<'a> {
    /// Splitting multiplier `ρ·u` (length n, in the row space of Q).
    Multiplier(&'a [f64]),
    /// Whitened dual vector (length m).
    Whitened(&'a [f64]),
}

struct Refit {
    solution: Vec<f64>,
    objective: f64,
    feasibility_gap: f64,
    dual: Option<Vec<f64>>,
}

struct Workspace<'a> {
    factor: &'a ConstraintFactor,
    weights: &'a [f64],
    y: &'a [f64],
    y_norm: f64,
    // whitened, normalized right-hand side
    y_white: Vec<f64>,
    scale: f64,
    // Last basis of an unfinished crossover.
    stalled: RefCell<Option<Stalled>>,
}

impl Workspace<'_> {
    fn feasibility_gap(&self, x: &[f64]) -> f64 {
        let ax = self.factor.matrix().mul_vec(x).expect("dimension checked");
        dist2(&ax, self.y)
    }

    /// Entries above `rel · max|z|`; if that exceeds `limit` entries, the
    /// `limit` largest instead (a candidate vertex of the feasible set).
    fn support_of(z: &[f64], rel: f64, limit: usize) -> Vec<usize> {
        let zmax = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if zmax == 0.0 {
            return Vec::new();
        }
        let support: Vec<usize> = z
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > rel * zmax)
            .map(|(i, _)| i)
            .collect();
        if support.len() <= limit {
            support
        } else {
            crate::signals::supp_k(z, limit).expect("limit below length")
        }
    }

    /// Tries to turn the current iterate into a certified optimum: first a
    /// refit on its thresholded support, then a simplex crossover from its
    /// `m` largest entries.
    fn certify(&self, z: &[f64], support: &[usize], lambda: &[f64]) -> Option<Refit> {
        let m = self.factor.rows();
        // A support close to m columns is almost never an exact fit unless
        // it is a full vertex, which the crossover below handles.
        if !support.is_empty() && 10 * support.len() < 9 * m {
            if let Some(refit) = self.refit(support, DualHint::Multiplier(lambda)) {
                if refit.dual.is_some() {
                    return Some(refit);
                }
            }
        }
        if m == self.factor.cols() {
            // Square systems have a single feasible point.
            let all: Vec<usize> = (0..m).collect();
            return self.refit(&all, DualHint::Multiplier(lambda)).filter(|r| r.dual.is_some());
        }
        // Nonzeros of z first, then the entries whose dual constraint is
        // closest to active.
        let score: Vec<f64> = z
            .iter()
            .zip(lambda)
            .zip(self.weights)
            .map(|((zj, lj), wj)| if *zj != 0.0 { 1.0 + zj.abs() } else { lj.abs() / wj })
            .collect();
        let start = crate::signals::supp_k(&score, m).expect("m below n");
        let mut stalled = self.stalled.borrow_mut();
        let budget = MAX_PIVOTS.max(m / 4);
        let vertex = match crossover(self.factor, self.weights, &self.y_white, &start, stalled.as_ref(), budget) {
            Crossover::Optimal(vertex) => vertex,
            Crossover::Stalled(basis) => {
                // A stall on a degenerate vertex: if it is optimal, its
                // support may be certifiable with the splitting's dual.
                let support = basis.support();
                *stalled = Some(basis);
                if support.len() == m {
                    return None;
                }
                return self.refit(&support, DualHint::Multiplier(lambda)).filter(|r| r.dual.is_some());
            }
            Crossover::Failed => return None,
        };
        let nonzero: Vec<usize> = vertex
            .columns
            .iter()
            .zip(&vertex.values)
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| *j)
            .collect();
        if nonzero.is_empty() {
            return None;
        }
        self.refit(&nonzero, DualHint::Whitened(&vertex.dual)).filter(|r| r.dual.is_some())
    }

    /// Least-squares refit on `support`, certified if the dual hint can be
    /// corrected into a dual-feasible vector.
    fn refit(&self, support: &[usize], hint: DualHint<'_>) -> Option<Refit> {
        let f = self.factor;
        let (m, n) = (f.rows(), f.cols());
        let s = support.len();
        if s == 0 || s > m {
            return None;
        }
        let q_s = DMatrix::from_fn(m, s, |i, j| f.q_row(i)[support[j]]);
        let qr = q_s.clone().qr();
        let r = qr.r();
        let rmax = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let rmin = r.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if !(rmin > 1e-10 * rmax) {
            return None;
        }
        let q_thin = qr.q();
        let qty = q_thin.tr_mul(&nalgebra::DVector::from_column_slice(&self.y_white));
        let coef = r.solve_upper_triangular(&qty)?;

        let mut solution = vec![0.0; n];
        for (j, &idx) in support.iter().enumerate() {
            solution[idx] = coef[j] * self.scale;
        }
        let feasibility_gap = self.feasibility_gap(&solution);
        if !(feasibility_gap <= POLISH_FEASIBILITY * (1.0 + self.y_norm)) {
            return None;
        }
        let objective = weighted_l1(&solution, self.weights);

        let dual = {
            let nu = match hint {
                DualHint::Multiplier(lambda) => {
                    let mut nu = vec![0.0; m];
                    f.q_mul(lambda, &mut nu);
                    nu
                }
                DualHint::Whitened(nu) => nu.to_vec(),
            };
            let target = nalgebra::DVector::from_fn(s, |j, _| self.weights[support[j]] * coef[j].signum());
            let on_support: Vec<bool> = (0..n).map(|j| solution[j] != 0.0).collect();
            self.certificate(nu, &q_s, &q_thin, &r, &target, &on_support)
        };

        Some(Refit { solution, objective, feasibility_gap, dual })
    }

    /// Searches for ν with `Q_Sᵀν = target` and `|qⱼᵀν| ≤ wⱼ` off the
    /// support, starting from `nu`. Each round projects onto the affine
    /// set by a minimum-norm correction inside range(Q_S), then clips the
    /// off-support correlations into a slightly shrunk box and maps back.
    /// Returns the unwhitened dual on success.
    fn certificate(
        &self,
        mut nu: Vec<f64>,
        q_s: &DMatrix<f64>,
        q_thin: &DMatrix<f64>,
        r: &DMatrix<f64>,
        target: &nalgebra::DVector<f64>,
        on_support: &[bool],
    ) -> Option<Vec<f64>> {
        let f = self.factor;
        let (m, n) = (f.rows(), f.cols());
        let rounds = if q_s.ncols() < m { CERT_ROUNDS } else { 1 };
        let mut g = vec![0.0; n];
        let mut best = f64::INFINITY;
        for _ in 0..rounds {
            let nu_vec = nalgebra::DVector::from_column_slice(&nu);
            let delta = target - q_s.tr_mul(&nu_vec);
            let t = r.tr_solve_upper_triangular(&delta)?;
            let corrected = nu_vec + q_thin * t;
            nu.copy_from_slice(corrected.as_slice());
            f.q_tr_mul(&nu, &mut g);

            let worst = g
                .iter()
                .zip(self.weights)
                .zip(on_support)
                .filter(|(_, on)| !**on)
                .fold(0.0f64, |acc, ((gj, wj), _)| acc.max(gj.abs() / wj));
            if worst <= 1.0 + CERT_TOL {
                return Some(f.unwhiten_dual(&nu));
            }
            // Stop once the violation no longer shrinks appreciably.
            if worst > 1.0 + 0.99 * (best - 1.0) {
                return None;
            }
            best = worst;
            for ((gj, wj), on) in g.iter_mut().zip(self.weights).zip(on_support) {
                if !on {
                    let cap = wj * (1.0 - CERT_MARGIN);
                    *gj += CERT_RELAXATION * (gj.clamp(-cap, cap) - *gj);
                }
            }
            f.q_mul(&g, &mut nu);
        }
        None
    }
}

pub(crate) fn solve(
    factor: &ConstraintFactor,
    y: &[f64],
    weights: &[f64],
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> SolveReport {
    let (m, n) = (factor.rows(), factor.cols());
    let y_norm = norm2(y);
    if y_norm == 0.0 {
        return SolveReport::zero(n);
    }

    let y_white_raw = factor.whiten(y);
    let mut x = vec![0.0; n];
    factor.q_tr_mul(&y_white_raw, &mut x);
    // Work on a problem normalized so the least-norm solution has unit peak.
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let inv = 1.0 / scale;
    x.iter_mut().for_each(|v| *v *= inv);
    let y_white: Vec<f64> = y_white_raw.iter().map(|v| v * inv).collect();

    let ws = Workspace { factor, weights, y, y_norm, y_white, scale, stalled: RefCell::new(None) };

    let sqrt_n = (n as f64).sqrt();
    let alpha = cfg.relaxation;
    let mut rho = cfg.penalty;
    let mut z = match start {
        Some(s) => s.iter().map(|v| v * inv).collect(),
        None => x.clone(),
    };
    let mut z_prev = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut xr = vec![0.0; n];
    let mut scratch = vec![0.0; m];

    let mut last_support: Vec<usize> = Vec::new();
    let mut next_attempt = 0usize;
    let mut next_forced = FIRST_FORCED;
    let mut backoff = FIRST_BACKOFF;

    let mut iterations = 0;
    let mut primal_residual = f64::INFINITY;
    let mut converged = false;
    let mut certified: Option<Refit> = None;

    if let (Some(_), true) = (start, cfg.polish) {
        // A feasible start is often optimal already, or a few pivots away.
        let support = Workspace::support_of(&z, cfg.polish_threshold, m);
        if let Some(refit) = ws.certify(&z, &support, &u) {
            certified = Some(refit);
            converged = true;
        }
    }

    while certified.is_none() && iterations < cfg.max_iters {
        iterations += 1;

        for ((xi, zi), ui) in x.iter_mut().zip(&z).zip(&u) {
            *xi = zi - ui;
        }
        factor.project(&mut x, &ws.y_white, &mut scratch);

        z_prev.copy_from_slice(&z);
        for i in 0..n {
            xr[i] = alpha * x[i] + (1.0 - alpha) * z_prev[i];
            z[i] = soft_threshold(xr[i] + u[i], weights[i] / rho);
            u[i] += xr[i] - z[i];
        }

        primal_residual = dist2(&x, &z);
        let dual_residual = rho * dist2(&z, &z_prev);
        let eps = cfg.tol_abs * sqrt_n + cfg.tol_rel * norm2(&x).max(norm2(&z));
        if primal_residual <= eps && dual_residual <= eps {
            converged = true;
            break;
        }

        if cfg.adaptive_penalty && iterations % BALANCE_EVERY == 0 {
            if primal_residual > 10.0 * dual_residual {
                rho *= 2.0;
                u.iter_mut().for_each(|v| *v *= 0.5);
            } else if dual_residual > 10.0 * primal_residual {
                rho *= 0.5;
                u.iter_mut().for_each(|v| *v *= 2.0);
            }
        }

        if cfg.polish && iterations % CHECK_EVERY == 0 {
            let support = Workspace::support_of(&z, cfg.polish_threshold, m);
            let stable = support == last_support;
            last_support = support;
            if (stable || iterations >= next_forced) && iterations >= next_attempt {
                let lambda: Vec<f64> = u.iter().map(|v| v * rho).collect();
                match ws.certify(&z, &last_support, &lambda) {
                    Some(refit) => {
                        certified = Some(refit);
                        converged = true;
                        break;
                    }
                    None => {
                        next_attempt = iterations + backoff;
                        next_forced = next_forced.max(iterations + 2 * backoff);
                        backoff = (backoff * 2).min(MAX_BACKOFF);
                    }
                }
            }
        }
    }

    if let Some(refit) = certified {
        return SolveReport {
            solution: refit.solution,
            objective: refit.objective,
            iterations,
            primal_residual: primal_residual * scale,
            feasibility_gap: refit.feasibility_gap,
            converged,
            polished: true,
            dual: refit.dual,
        };
    }

    // The projected iterate is feasible; use it as the fallback and as the
    // objective reference for accepting a refit.
    let x_feasible: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let x_objective = weighted_l1(&x_feasible, weights);
    if cfg.polish {
        let support = Workspace::support_of(&z, cfg.polish_threshold, m);
        let lambda: Vec<f64> = u.iter().map(|v| v * rho).collect();
        if let Some(refit) = ws.refit(&support, DualHint::Multiplier(&lambda)) {
            if refit.objective <= x_objective + POLISH_OBJECTIVE * (1.0 + x_objective) {
                return SolveReport {
                    solution: refit.solution,
                    objective: refit.objective,
                    iterations,
                    primal_residual: primal_residual * scale,
                    feasibility_gap: refit.feasibility_gap,
                    converged,
                    polished: true,
                    dual: refit.dual,
                };
            }
        }
    }

    let feasibility_gap = ws.feasibility_gap(&x_feasible);
    SolveReport {
        solution: x_feasible,
        objective: x_objective,
        iterations,
        primal_residual: primal_residual * scale,
        feasibility_gap,
        converged,
        polished: false,
        dual: None,
    }
}
