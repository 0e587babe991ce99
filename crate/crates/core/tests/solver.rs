mod common;

use common::{gaussian, l1, lp_oracle, matrix, max_abs_diff, norm2, sparse};
use nics::sensing::DenseMatrix;
use nics::signals::AmplitudeModel;
use nics::solver::{basis_pursuit, min_over_nullspace, weighted_basis_pursuit, ConstraintFactor, SolverConfig};
use nics::Error;
use proptest::prelude::*;

fn rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

// Small instance: sizes, matrix and a right-hand side that is either a
// sparse combination or a dense Gaussian vector.
fn small_instance(case: u32) -> (DenseMatrix, Vec<f64>) {
    let sizes = gaussian(77, vec![case, 9], 3);
    let m = 4 + (sizes[0].abs() * 1000.0) as usize % 9;
    let n = (m + 4).max(8) + (sizes[1].abs() * 1000.0) as usize % (25 - (m + 4).max(8));
    let a = matrix(77, case, m, n);
    let y = if case % 3 == 0 {
        gaussian(77, vec![case, 2], m)
    } else {
        let k = 1 + (sizes[2].abs() * 1000.0) as usize % m;
        a.mul_vec(&sparse(77, case, n, k, AmplitudeModel::standard_gaussian())).unwrap()
    };
    (a, y)
}

#[test]
fn matches_lp_oracle_on_small_instances() {
    let cfg = SolverConfig::default();
    let mut converged = 0;
    for case in 0..100 {
        let (a, y) = small_instance(case);
        assert!((4..=12).contains(&a.rows()) && (8..=24).contains(&a.cols()));
        let report = basis_pursuit(&a, &y, &cfg).unwrap();
        let (_, oracle) = lp_oracle::l1(&rows(&a), &y).unwrap();
        assert!(
            (report.objective - oracle).abs() <= 1e-6 * oracle.max(1e-12),
            "case {case}: objective {} vs oracle {oracle}",
            report.objective
        );
        if report.converged {
            converged += 1;
            assert!(report.feasibility_gap <= 1e-8 * (1.0 + norm2(&y)), "case {case}");
        }
    }
    assert_eq!(converged, 100);
}

#[test]
fn weighted_matches_lp_oracle() {
    let cfg = SolverConfig::default();
    for case in 0..40 {
        let (a, y) = small_instance(1000 + case);
        let w: Vec<f64> = gaussian(78, vec![case], a.cols()).iter().map(|g| 0.5 + g.abs()).collect();
        let report = weighted_basis_pursuit(&a, &y, &w, &cfg).unwrap();
        let (_, oracle) = lp_oracle::weighted_l1(&rows(&a), &y, &w).unwrap();
        assert!(report.converged, "case {case}");
        assert!((report.objective - oracle).abs() <= 1e-6 * oracle, "case {case}");
        assert!(report.feasibility_gap <= 1e-8 * (1.0 + norm2(&y)));
    }
}

#[test]
fn zero_measurements_give_zero() {
    let a = matrix(1, 0, 5, 10);
    let report = basis_pursuit(&a, &[0.0; 5], &SolverConfig::default()).unwrap();
    assert!(report.converged);
    assert_eq!(report.solution, vec![0.0; 10]);
    assert_eq!(report.objective, 0.0);
}

#[test]
fn square_system_returns_the_unique_solution() {
    let a = matrix(2, 0, 6, 6);
    let x = gaussian(2, vec![5], 6);
    let y = a.mul_vec(&x).unwrap();
    let report = basis_pursuit(&a, &y, &SolverConfig::default()).unwrap();
    assert!(report.converged);
    assert!(max_abs_diff(&report.solution, &x) < 1e-9);
}

#[test]
fn recovers_sparse_vector_exactly() {
    let a = matrix(3, 0, 60, 120);
    let x = sparse(3, 0, 120, 6, AmplitudeModel::rademacher());
    let y = a.mul_vec(&x).unwrap();
    let report = basis_pursuit(&a, &y, &SolverConfig::default()).unwrap();
    assert!(report.converged && report.polished);
    let err: f64 = report.solution.iter().zip(&x).map(|(u, v)| (u - v) * (u - v)).sum();
    assert!(err <= 1e-20, "squared error {err}");
}

#[test]
fn constant_weights_share_the_minimizer() {
    let cfg = SolverConfig::default();
    let a = matrix(4, 0, 20, 40);
    let x = sparse(4, 0, 40, 4, AmplitudeModel::standard_gaussian());
    let y = a.mul_vec(&x).unwrap();
    let plain = basis_pursuit(&a, &y, &cfg).unwrap();
    let ones = weighted_basis_pursuit(&a, &y, &[1.0; 40], &cfg).unwrap();
    assert!(max_abs_diff(&plain.solution, &ones.solution) < 1e-12);
    for c in [0.25, 7.0] {
        let scaled = weighted_basis_pursuit(&a, &y, &[c; 40], &cfg).unwrap();
        assert!(max_abs_diff(&plain.solution, &scaled.solution) < 1e-9);
        assert!((scaled.objective - c * plain.objective).abs() < 1e-9 * scaled.objective);
    }
}

#[test]
fn heavy_off_support_weights_confine_the_solution() {
    let (m, n) = (10, 30);
    let a = matrix(5, 0, m, n);
    let set: Vec<usize> = vec![1, 4, 7, 11, 15, 20, 22, 28];
    let mut x = vec![0.0; n];
    for (&i, v) in set.iter().zip(gaussian(5, vec![1], set.len())) {
        x[i] = v;
    }
    let y = a.mul_vec(&x).unwrap();
    let mut w = vec![1e6; n];
    set.iter().for_each(|&i| w[i] = 1.0);
    let report = weighted_basis_pursuit(&a, &y, &w, &SolverConfig::default()).unwrap();
    for j in 0..n {
        if !set.contains(&j) {
            assert!(report.solution[j].abs() <= 1e-5, "entry {j} = {}", report.solution[j]);
        }
    }
    // With |L| ≤ m the fit on L is exact, so it must reproduce x.
    assert!(max_abs_diff(&report.solution, &x) < 1e-5);
}

#[test]
fn weights_equal_a_change_of_variables() {
    let cfg = SolverConfig::default();
    for case in 0..10 {
        let (a, y) = small_instance(2000 + case);
        let d: Vec<f64> = gaussian(79, vec![case], a.cols()).iter().map(|g| 0.3 + g.abs()).collect();
        let weighted = weighted_basis_pursuit(&a, &y, &d, &cfg).unwrap();
        // A·D⁻¹ with z' = D·z
        let scaled = DenseMatrix::new(
            a.rows(),
            a.cols(),
            (0..a.rows()).flat_map(|i| (0..a.cols()).map(move |j| (i, j))).map(|(i, j)| a.get(i, j) / d[j]).collect(),
        )
        .unwrap();
        let plain = basis_pursuit(&scaled, &y, &cfg).unwrap();
        assert!((weighted.objective - plain.objective).abs() <= 1e-7 * plain.objective, "case {case}");
    }
}

#[test]
fn solution_scales_with_measurements() {
    let cfg = SolverConfig::default();
    let a = matrix(6, 0, 15, 40);
    let y = a.mul_vec(&sparse(6, 0, 40, 5, AmplitudeModel::standard_gaussian())).unwrap();
    let base = basis_pursuit(&a, &y, &cfg).unwrap();
    for alpha in [0.1, 10.0] {
        let ys: Vec<f64> = y.iter().map(|v| v * alpha).collect();
        let scaled = basis_pursuit(&a, &ys, &cfg).unwrap();
        let expected: Vec<f64> = base.solution.iter().map(|v| v * alpha).collect();
        assert!(max_abs_diff(&scaled.solution, &expected) <= 1e-9 * alpha);
    }
}

#[test]
fn dual_certifies_polished_solutions() {
    let cfg = SolverConfig::default();
    let mut certified = 0;
    for case in 0..30 {
        let (a, y) = small_instance(3000 + case);
        let report = basis_pursuit(&a, &y, &cfg).unwrap();
        let Some(nu) = &report.dual else { continue };
        certified += 1;
        let corr = a.tr_mul_vec(nu).unwrap();
        for (j, (c, z)) in corr.iter().zip(&report.solution).enumerate() {
            if *z != 0.0 {
                assert!((c - z.signum()).abs() < 1e-7, "case {case}, j {j}: {c}");
            } else {
                assert!(c.abs() <= 1.0 + 1e-7, "case {case}, j {j}: {c}");
            }
        }
        // Strong duality: yᵀν equals the objective.
        let dual_value: f64 = y.iter().zip(nu).map(|(a, b)| a * b).sum();
        assert!((dual_value - report.objective).abs() <= 1e-7 * (1.0 + report.objective));
    }
    assert!(certified >= 25, "only {certified} of 30 solves certified");
}

#[test]
fn null_space_minimum_matches_oracle() {
    let cfg = SolverConfig::default();
    for case in 0..20 {
        let (m, n) = (6 + case as usize % 5, 16);
        let a = matrix(80, case, m, n);
        let k_set: Vec<usize> = (0..3 + case as usize % 3).map(|i| (i * 5 + case as usize) % n).collect();
        let mut k_set = k_set;
        k_set.sort_unstable();
        k_set.dedup();
        let x_k = gaussian(80, vec![case, 7], k_set.len());
        for c in [1.2, 2.0, 5.0] {
            let ours = min_over_nullspace(&a, &x_k, &k_set, c, &cfg).unwrap();
            let oracle = lp_oracle::null_space_min(&rows(&a), &x_k, &k_set, c);
            assert!((ours - oracle).abs() <= 1e-6 * (1.0 + oracle), "case {case}, C {c}: {ours} vs {oracle}");
            assert!(ours <= l1(&x_k) + 1e-12);
        }
    }
}

#[test]
fn rejects_invalid_input() {
    let cfg = SolverConfig::default();
    let a = matrix(7, 0, 4, 8);
    let y = vec![1.0; 4];
    fn bad<T>(r: nics::Result<T>) -> bool {
        matches!(r, Err(Error::InvalidArgument(_)))
    }
    assert!(bad(weighted_basis_pursuit(&a, &y, &[1.0; 7], &cfg)));
    let mut w = vec![1.0; 8];
    w[3] = 0.0;
    assert!(bad(weighted_basis_pursuit(&a, &y, &w, &cfg)));
    w[3] = -1.0;
    assert!(bad(weighted_basis_pursuit(&a, &y, &w, &cfg)));
    w[3] = f64::NAN;
    assert!(bad(weighted_basis_pursuit(&a, &y, &w, &cfg)));
    assert!(bad(basis_pursuit(&a, &[1.0; 3], &cfg)));
    assert!(bad(basis_pursuit(&a, &[1.0, f64::INFINITY, 0.0, 0.0], &cfg)));
    assert!(bad(min_over_nullspace(&a, &[1.0], &[0], 1.0, &cfg)));
    assert!(bad(min_over_nullspace(&a, &[1.0], &[0], 0.5, &cfg)));
    assert!(bad(min_over_nullspace(&a, &[1.0], &[9], 2.0, &cfg)));
    let mut bad_cfg = cfg.clone();
    bad_cfg.relaxation = 2.5;
    assert!(bad(basis_pursuit(&a, &y, &bad_cfg)));

    let tall = matrix(7, 1, 9, 8);
    assert!(bad(ConstraintFactor::new(&tall)));
    // Two identical rows: A·Aᵀ is singular.
    let mut data = a.as_slice().to_vec();
    data.copy_within(0..8, 8);
    let singular = DenseMatrix::new(4, 8, data).unwrap();
    assert!(matches!(ConstraintFactor::new(&singular), Err(Error::Numerical(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn feasible_and_no_worse_than_the_truth(seed in any::<u64>(), k in 1usize..6) {
        let a = matrix(seed, 0, 12, 30);
        let x = sparse(seed, 0, 30, k, AmplitudeModel::standard_gaussian());
        let y = a.mul_vec(&x).unwrap();
        let report = basis_pursuit(&a, &y, &SolverConfig::default()).unwrap();
        prop_assert!(report.converged);
        prop_assert!(report.feasibility_gap <= 1e-8 * (1.0 + norm2(&y)));
        prop_assert!(report.objective <= l1(&x) * (1.0 + 1e-9));
    }
}

#[test]
fn scaling_matrix_and_measurements_together_changes_nothing() {
    let cfg = SolverConfig::default();
    let a = matrix(8, 0, 15, 40);
    let y = a.mul_vec(&sparse(8, 0, 40, 5, AmplitudeModel::standard_gaussian())).unwrap();
    let base = basis_pursuit(&a, &y, &cfg).unwrap();
    for alpha in [0.1, 10.0] {
        let scaled_a = DenseMatrix::new(15, 40, a.as_slice().iter().map(|v| v * alpha).collect()).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v * alpha).collect();
        let scaled = basis_pursuit(&scaled_a, &ys, &cfg).unwrap();
        assert!(max_abs_diff(&scaled.solution, &base.solution) <= 1e-9);
    }
}

#[test]
fn dense_support_of_size_m_falls_below_the_reference() {
    let cfg = SolverConfig::default();
    for case in 0..5 {
        let a = matrix(9, case, 4, 8);
        let k_set = vec![0, 2, 4, 6];
        let x_k = gaussian(9, vec![case, 1], 4);
        let value = min_over_nullspace(&a, &x_k, &k_set, 2.0, &cfg).unwrap();
        assert!(value < l1(&x_k) - 1e-6, "case {case}: {value} vs {}", l1(&x_k));
        let oracle = lp_oracle::null_space_min(&rows(&a), &x_k, &k_set, 2.0);
        assert!((value - oracle).abs() <= 1e-6 * (1.0 + oracle));
    }
}

#[test]
fn square_matrix_null_space_minimum_is_the_reference() {
    let a = matrix(10, 0, 6, 6);
    let x_k = vec![1.0, -2.0, 0.5];
    let value = min_over_nullspace(&a, &x_k, &[0, 3, 5], 1.5, &SolverConfig::default()).unwrap();
    assert_eq!(value, 3.5);
}
