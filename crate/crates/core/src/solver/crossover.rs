//! Simplex crossover from an approximate splitting iterate to an exact vertex.
//!
//! Writing `z = p − q` with `p, q ≥ 0`, every nonsingular column subset `S`
//! of size `m` gives a feasible basis once each basic column takes the sign
//! of its coefficient. Starting from the `m` largest entries of the current
//! iterate, a revised primal simplex with an explicitly updated basis
//! inverse pivots to an optimal vertex. Termination leaves a dual vector `ν`
//! with `|qⱼᵀν| ≤ wⱼ` everywhere and equality on the basis.

use nalgebra::DMatrix;

use super::factor::ConstraintFactor;
use crate::linalg;

const PRICE_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 256;
const DEGENERATE_SWITCH: usize = 50;
// Steps this short (in normalized units) count as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;
// Size of the right-hand-side perturbation that breaks primal degeneracy,
// and the level below which unperturbed basic values count as zero.
const PERTURBATION: f64 = 1e-9;
const ZERO_VALUE: f64 = 1e-7;

// Deterministic perturbation of the basic value of column j.
fn perturbation(j: usize) -> f64 {
    PERTURBATION * (1.0 + (j as f64 * 0.618_033_988_749_895).fract())
}

/// Basis reached when the pivot budget ran out, kept to resume from.
#[derive(Debug, Clone)]
pub(crate) struct Stalled {
    columns: Vec<usize>,
    signs: Vec<f64>,
    values: Vec<f64>,
    objective: f64,
    // The second half of the run that produced this basis still lowered
    // the objective.
    improved: bool,
}

impl Stalled {
    /// Basic columns with nonzero value.
    pub(crate) fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> =
            self.columns.iter().zip(&self.values).filter(|(_, v)| **v != 0.0).map(|(j, _)| *j).collect();
        s.sort_unstable();
        s
    }
}

pub(crate) struct Vertex {
    /// Basic columns and their coefficients (zero-valued entries included).
    pub columns: Vec<usize>,
    pub values: Vec<f64>,
    /// Whitened dual vector.
    pub dual: Vec<f64>,
}

struct Basis {
    columns: Vec<usize>,
    signs: Vec<f64>,
    // inverse of Q_S · diag(signs), row-major m × m
    inv: Vec<f64>,
    // basic variable values |z_S|, all ≥ 0
    values: Vec<f64>,
}

fn column(factor: &ConstraintFactor, j: usize) -> Vec<f64> {
    (0..factor.rows()).map(|i| factor.q_row(i)[j]).collect()
}

fn factorize(
    factor: &ConstraintFactor,
    columns: &[usize],
    signs: Option<&[f64]>,
    y_white: &[f64],
) -> Option<Basis> {
    let m = factor.rows();
    let q_s = DMatrix::from_fn(m, m, |i, j| factor.q_row(i)[columns[j]]);
    let lu = q_s.lu();
    let coef = lu.solve(&nalgebra::DVector::from_column_slice(y_white))?;
    let inv_na = lu.try_inverse()?;
    if inv_na.iter().any(|v| !v.is_finite()) || inv_na.amax() > 1e10 {
        return None;
    }
    let signs: Vec<f64> = match signs {
        Some(s) => s.to_vec(),
        None => coef.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect(),
    };
    // transpose of a column-major matrix is its row-major layout
    let mut inv = inv_na.transpose().as_slice().to_vec();
    for (row, s) in inv.chunks_exact_mut(m).zip(&signs) {
        row.iter_mut().for_each(|v| *v *= s);
    }
    let values = coef
        .iter()
        .zip(&signs)
        .zip(columns)
        .map(|((c, s), &j)| (c * s).max(0.0) + perturbation(j))
        .collect();
    Some(Basis { columns: columns.to_vec(), signs, inv, values })
}

// Basic values for the unperturbed right-hand side, with the sign of each
// column applied and values below ZERO_VALUE set to zero.
fn unperturbed(basis: &Basis, y_white: &[f64]) -> Vec<f64> {
    let m = y_white.len();
    basis
        .inv
        .chunks_exact(m)
        .zip(&basis.signs)
        .map(|(row, s)| {
            let v = linalg::dot(row, y_white);
            if v <= ZERO_VALUE {
                0.0
            } else {
                v * s
            }
        })
        .collect()
}

fn objective(basis: &Basis, weights: &[f64]) -> f64 {
    basis.values.iter().zip(&basis.columns).map(|(v, &j)| v * weights[j]).sum()
}

/// Outcome of a bounded simplex run.
pub(crate) enum Crossover {
    Optimal(Vertex),
    Stalled(Stalled),
    Failed,
}

/// Runs simplex pivots from the basis `start` (length m), or from `resume`
/// if that basis has the lower objective and was still improving. A fresh
/// start gets `max_pivots` pivots, a resumed one four times as many: when
/// the splitting iterate no longer beats the stalled basis, pivoting is the
/// faster way forward. A basis stuck on a degenerate vertex is dropped.
pub(crate) fn crossover(
    factor: &ConstraintFactor,
    weights: &[f64],
    y_white: &[f64],
    start: &[usize],
    resume: Option<&Stalled>,
    max_pivots: usize,
) -> Crossover {
    let fresh = factorize(factor, start, None, y_white);
    let resume = resume.filter(|r| r.improved);
    let (basis, budget) = match (fresh, resume) {
        (Some(b), Some(r)) if objective(&b, weights) <= r.objective => (Some(b), max_pivots),
        (fresh, Some(r)) => match factorize(factor, &r.columns, Some(&r.signs), y_white) {
            Some(b) => (Some(b), 4 * max_pivots),
            None => (fresh, max_pivots),
        },
        (fresh, None) => (fresh, max_pivots),
    };
    match basis.and_then(|b| pivot(factor, weights, y_white, b, budget)) {
        Some(Ok(vertex)) => Crossover::Optimal(vertex),
        Some(Err(stalled)) => Crossover::Stalled(stalled),
        None => Crossover::Failed,
    }
}

fn dual_of(basis: &Basis, weights: &[f64], m: usize) -> Vec<f64> {
    // ν = B⁻ᵀ c_B
    let mut nu = vec![0.0; m];
    for (row, &j) in basis.inv.chunks_exact(m).zip(&basis.columns) {
        linalg::axpy(weights[j], row, &mut nu);
    }
    nu
}

// `None` on numerical trouble, `Err` when the budget runs out. Entering
// columns are chosen by devex pricing; the dual and the reduced costs are
// updated from the pivot row and recomputed at every refactorization.
fn pivot(
    factor: &ConstraintFactor,
    weights: &[f64],
    y_white: &[f64],
    mut basis: Basis,
    max_pivots: usize,
) -> Option<Result<Vertex, Stalled>> {
    let (m, n) = (factor.rows(), factor.cols());
    let mut midway = objective(&basis, weights);
    let mut in_basis = vec![false; n];
    for &j in &basis.columns {
        in_basis[j] = true;
    }

    let mut nu = Vec::new();
    let mut g = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut devex = vec![1.0; n];
    let mut exact = false;
    let mut degenerate_run = 0usize;
    let mut since_refactor = 0usize;
    let mut step = 0;

    while step <= max_pivots {
        if step == max_pivots / 2 {
            midway = objective(&basis, weights);
        }
        if !exact {
            nu = dual_of(&basis, weights, m);
            factor.q_tr_mul(&nu, &mut g);
            exact = true;
        }

        let bland = degenerate_run > DEGENERATE_SWITCH;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_basis[j] {
                continue;
            }
            let violation = g[j].abs() - weights[j];
            if violation > PRICE_TOL * weights[j] {
                if bland {
                    entering = Some((j, violation));
                    break;
                }
                let score = violation * violation / devex[j];
                if entering.is_none_or(|(_, best)| score > best) {
                    entering = Some((j, score));
                }
            }
        }

        let Some((enter, _)) = entering else {
            // Confirm with freshly computed reduced costs.
            let fresh = dual_of(&basis, weights, m);
            factor.q_tr_mul(&fresh, &mut g);
            let optimal = (0..n).all(|j| in_basis[j] || g[j].abs() - weights[j] <= PRICE_TOL * weights[j]);
            if !optimal {
                nu = fresh;
                continue;
            }
            let values = unperturbed(&basis, y_white);
            return Some(Ok(Vertex { columns: basis.columns, values, dual: fresh }));
        };
        step += 1;

        let sign = g[enter].signum();
        let a: Vec<f64> = column(factor, enter).into_iter().map(|v| v * sign).collect();
        let d: Vec<f64> = basis.inv.chunks_exact(m).map(|row| linalg::dot(row, &a)).collect();

        let dmax = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if d[i] > PIVOT_TOL * dmax.max(1.0) {
                let ratio = basis.values[i] / d[i];
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best || (ratio == best && bland && basis.columns[i] < basis.columns[r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // An improving ray would make the objective unbounded below, which a
        // norm cannot be; treat it as numerical failure.
        let (r, theta) = leave?;
        let pivot = d[r];
        let leaving = basis.columns[r];

        degenerate_run = if theta <= DEGENERATE_STEP { degenerate_run + 1 } else { 0 };

        for i in 0..m {
            basis.values[i] = (basis.values[i] - theta * d[i]).max(0.0);
        }
        basis.values[r] = theta;
        in_basis[leaving] = false;
        in_basis[enter] = true;
        basis.columns[r] = enter;
        basis.signs[r] = sign;

        since_refactor += 1;
        if since_refactor >= REFACTOR_EVERY {
            basis = factorize(factor, &basis.columns, Some(&basis.signs), y_white)?;
            since_refactor = 0;
            exact = false;
            continue;
        }

        // Pivot row αⱼ = ρᵣᵀqⱼ with ρᵣ row r of the old inverse; it moves
        // the dual, the reduced costs and the devex reference weights.
        let rho_r = basis.inv[r * m..(r + 1) * m].to_vec();
        factor.q_tr_mul(&rho_r, &mut alpha);
        let step_dual = (weights[enter] - g[enter].abs()) / pivot;
        linalg::axpy(step_dual, &rho_r, &mut nu);
        linalg::axpy(step_dual, &alpha, &mut g);
        let ref_weight = devex[enter];
        for j in 0..n {
            if !in_basis[j] {
                let ratio = alpha[j] / pivot;
                devex[j] = devex[j].max(ratio * ratio * ref_weight);
            }
        }
        devex[leaving] = (ref_weight / (pivot * pivot)).max(1.0);
        if devex.iter().any(|v| *v > 1e6) {
            devex.iter_mut().for_each(|v| *v = 1.0);
        }

        // Product-form update of the inverse.
        let pivot_row: Vec<f64> = rho_r.iter().map(|v| v / pivot).collect();
        for (i, row) in basis.inv.chunks_exact_mut(m).enumerate() {
            if i == r {
                row.copy_from_slice(&pivot_row);
            } else if d[i] != 0.0 {
                linalg::axpy(-d[i], &pivot_row, row);
            }
        }
    }
    let objective = objective(&basis, weights);
    let improved = objective < midway * (1.0 - 1e-9);
    let values = unperturbed(&basis, y_white);
    Some(Err(Stalled { columns: basis.columns, signs: basis.signs, values, objective, improved }))
}
