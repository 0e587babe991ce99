//! Reference LP solver for small problems: a dense two-phase tableau
//! simplex with Bland's rule, written independently of the library.

const EPS: f64 = 1e-11;

/// Solves `min cᵀv  s.t.  M·v = b, v ≥ 0` for dense row-major `M` (rows ×
/// cols). Returns `(v, objective)`, or `None` if infeasible.
pub fn solve_standard(m_rows: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(Vec<f64>, f64)> {
    let rows = m_rows.len();
    let cols = c.len();
    // Tableau columns: structural, artificial, rhs.
    let width = cols + rows + 1;
    let mut t = vec![vec![0.0; width]; rows];
    for i in 0..rows {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..cols {
            t[i][j] = flip * m_rows[i][j];
        }
        t[i][cols + i] = 1.0;
        t[i][width - 1] = flip * b[i];
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![0.0; cols + rows];
    phase1[cols..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut t, &mut basis, &phase1, cols + rows);
    let infeasibility: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= cols)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-8 * scale {
        return None;
    }
    // Drive remaining (zero-valued) artificials out of the basis.
    for i in 0..rows {
        if basis[i] >= cols {
            if let Some(j) = (0..cols).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase 2 on the structural columns only.
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(f64::INFINITY, rows));
    run(&mut t, &mut basis, &cost, cols);

    let mut v = vec![0.0; cols];
    for (i, &j) in basis.iter().enumerate() {
        if j < cols {
            v[j] = t[i][width - 1];
        }
    }
    let objective = v.iter().zip(c).map(|(a, b)| a * b).sum();
    Some((v, objective))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, e: usize) {
    let p = t[r][e];
    t[r].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[e];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    basis[r] = e;
}

// Bland's rule over columns < `eligible`; basic artificial columns with
// infinite cost are treated as cost zero (they sit at value zero).
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], eligible: usize) {
    let rows = t.len();
    let width = t[0].len();
    let cb = |j: usize| if cost[j].is_finite() { cost[j] } else { 0.0 };
    loop {
        let entering = (0..eligible).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cb(j) - (0..rows).map(|i| cb(basis[i]) * t[i][j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(e) = entering else { return };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            if t[i][e] > EPS {
                let ratio = t[i][width - 1] / t[i][e];
                let better = match leave {
                    None => true,
                    Some((r, best)) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { panic!("unbounded LP in oracle") };
        pivot(t, basis, r, e);
    }
}

/// `min Σ wᵢ|zᵢ|  s.t.  A·z = y` via the split `z = p − q`.
pub fn weighted_l1(a_rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = w.len();
    let m_rows: Vec<Vec<f64>> =
        a_rows.iter().map(|r| r.iter().copied().chain(r.iter().map(|v| -v)).collect()).collect();
    let c: Vec<f64> = w.iter().chain(w).copied().collect();
    let (v, obj) = solve_standard(&m_rows, y, &c)?;
    let z = (0..n).map(|i| v[i] - v[n + i]).collect();
    Some((z, obj))
}

pub fn l1(a_rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    weighted_l1(a_rows, y, &vec![1.0; a_rows[0].len()])
}

/// `min over A·w = 0 of ‖x_K + w_K‖₁ + ‖w_K̄‖₁ / C`.
pub fn null_space_min(a_rows: &[Vec<f64>], x_k: &[f64], k_set: &[usize], c: f64) -> f64 {
    let n = a_rows[0].len();
    // Variables u = w + x_K (embedded): A·u = A·x_K, cost 1 on K, 1/C off.
    let mut shift = vec![0.0; n];
    let mut weights = vec![1.0 / c; n];
    for (&i, &v) in k_set.iter().zip(x_k) {
        shift[i] = v;
        weights[i] = 1.0;
    }
    let b: Vec<f64> = a_rows.iter().map(|r| r.iter().zip(&shift).map(|(a, s)| a * s).sum()).collect();
    weighted_l1(a_rows, &b, &weights).expect("u = x_K is feasible").1
}
