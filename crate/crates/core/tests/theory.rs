mod common;

use common::{gaussian, lp_oracle, matrix, norm2};
use nics::solver::{basis_pursuit, SolverConfig};
use nics::theory::{check_null_space_condition, scaling_law_c, verify_stability_bounds, NULL_SPACE_TOL};

// `x` with Gaussian entries on K = {0, stride, 2·stride, ...} and a small
// Gaussian tail elsewhere.
fn split_signal(seed: u64, case: u32, n: usize, k: usize, tail: f64) -> (Vec<f64>, Vec<usize>) {
    let stride = n / k;
    let k_set: Vec<usize> = (0..k).map(|i| i * stride).collect();
    let g = gaussian(seed, vec![case, 3], n);
    let mut x: Vec<f64> = g.iter().map(|v| v * tail).collect();
    for &i in &k_set {
        x[i] = g[i];
    }
    (x, k_set)
}

fn rows(a: &nics::sensing::DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

#[test]
fn null_space_verdict_agrees_with_oracle() {
    let cfg = SolverConfig::default();
    let (mut holds, mut fails) = (0, 0);
    for case in 0..50u32 {
        let n = 16 + (case as usize % 9);
        let m = n / 2;
        let k = 1 + case as usize % m;
        let c = [1.5, 3.0][case as usize % 2];
        let a = matrix(90, case, m, n);
        let (x, k_set) = split_signal(90, case, n, k, 0.0);
        let verdict = check_null_space_condition(&a, &x, &k_set, c, &cfg).unwrap();
        let x_k: Vec<f64> = k_set.iter().map(|&i| x[i]).collect();
        let oracle = lp_oracle::null_space_min(&rows(&a), &x_k, &k_set, c);
        let oracle_holds = oracle >= verdict.reference - NULL_SPACE_TOL * (1.0 + verdict.reference);
        assert_eq!(verdict.holds, oracle_holds, "case {case}: {} vs {oracle}", verdict.min_value);
        assert!(verdict.min_value <= verdict.reference * (1.0 + 1e-12));
        if verdict.holds {
            holds += 1;
        } else {
            fails += 1;
        }
    }
    assert!(holds >= 5 && fails >= 5, "{holds} hold, {fails} fail");
}

#[test]
fn null_space_condition_is_monotone_in_c() {
    let cfg = SolverConfig::default();
    let cs = [1.1, 1.5, 2.0, 4.0, 10.0];
    for case in 0..15u32 {
        let a = matrix(91, case, 10, 20);
        let (x, k_set) = split_signal(91, case, 20, 1 + case as usize % 6, 0.0);
        let verdicts: Vec<bool> =
            cs.iter().map(|&c| check_null_space_condition(&a, &x, &k_set, c, &cfg).unwrap().holds).collect();
        for (i, j) in (0..cs.len()).flat_map(|i| (i + 1..cs.len()).map(move |j| (i, j))) {
            assert!(!verdicts[j] || verdicts[i], "case {case}: holds at C = {} but not at {}", cs[j], cs[i]);
        }
    }
}

#[test]
fn square_matrix_has_trivial_null_space() {
    let a = matrix(92, 0, 8, 8);
    let (x, k_set) = split_signal(92, 0, 8, 4, 0.0);
    let verdict = check_null_space_condition(&a, &x, &k_set, 1.2, &SolverConfig::default()).unwrap();
    assert!(verdict.holds);
    assert!((verdict.min_value - verdict.reference).abs() <= 1e-9 * verdict.reference);
}

#[test]
fn support_as_large_as_m_fails() {
    for case in 0..5 {
        let a = matrix(93, case, 8, 20);
        let k_set: Vec<usize> = (0..8).collect();
        let x = gaussian(93, vec![case], 20);
        let verdict = check_null_space_condition(&a, &x, &k_set, 2.0, &SolverConfig::default()).unwrap();
        assert!(!verdict.holds, "case {case}");
    }
}

#[test]
fn stability_bounds_hold_below_the_scaled_threshold() {
    let cfg = SolverConfig::default();
    let (n, m, varpi) = (200, 100, 0.3);
    let c = scaling_law_c(varpi).unwrap();
    let k = ((1.0 - varpi) * 0.17 * n as f64).floor() as usize;
    let mut holds = 0;
    for case in 0..50 {
        let a = matrix(94, case, m, n);
        let (x, k_set) = split_signal(94, case, n, k, 1e-3);
        let y = a.mul_vec(&x).unwrap();
        let x_hat = basis_pursuit(&a, &y, &cfg).unwrap().solution;
        if verify_stability_bounds(&x, &x_hat, &k_set, c).unwrap().holds {
            holds += 1;
        }
    }
    assert_eq!(holds, 50);
}

#[test]
fn null_space_condition_implies_stability() {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for case in 0..40u32 {
        let a = matrix(95, case, 10, 24);
        let (x, k_set) = split_signal(95, case, 24, 1 + case as usize % 3, 0.05);
        let c = 2.0;
        // Every sign pattern on K the solver can meet: probe the true one
        // and its negation.
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let probes = [&x, &neg];
        if !probes.iter().all(|p| check_null_space_condition(&a, p, &k_set, c, &cfg).unwrap().holds) {
            continue;
        }
        checked += 1;
        let y = a.mul_vec(&x).unwrap();
        assert!(norm2(&y) > 0.0);
        let x_hat = basis_pursuit(&a, &y, &cfg).unwrap().solution;
        assert!(verify_stability_bounds(&x, &x_hat, &k_set, c).unwrap().holds, "case {case}");
    }
    assert!(checked >= 10, "only {checked} instances satisfied the condition");
}

#[test]
fn rejects_c_not_above_one() {
    let a = matrix(96, 0, 4, 8);
    let x = vec![1.0; 8];
    assert!(check_null_space_condition(&a, &x, &[0], 1.0, &SolverConfig::default()).is_err());
    assert!(check_null_space_condition(&a, &x, &[9], 2.0, &SolverConfig::default()).is_err());
    assert!(check_null_space_condition(&a, &x[..7], &[0], 2.0, &SolverConfig::default()).is_err());
}
