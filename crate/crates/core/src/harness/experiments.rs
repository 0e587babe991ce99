//! Support-recovery, planted-support weighted ℓ1 and stability experiments.

use rand::seq::index;
use rayon::prelude::*;

use super::{
    default_k_grid, estimate_threshold, run_sweep, with_pool, Algorithm, SweepConfig, KIND_MATRIX,
    KIND_SIGNAL, KIND_WEIGHTS,
};
use crate::error::{invalid, Result};
use crate::sampling::{derive_stream, sample_gaussian, RandomStream, SeedSpec};
use crate::sensing::{apply_forward, gen_gaussian_matrix, gen_weight_diagonal};
use crate::signals::{gen_sparse_signal, is_success, squared_error, supp_k, support_overlap, AmplitudeModel};
use crate::solver::{ConstraintFactor, SolverConfig};
use crate::theory::{scaling_law_c, verify_stability_bounds};

// First path labels of the experiments, kept clear of sweep paths.
const TAG_SUPPORT: u32 = 0xFFFF_FF01;
const TAG_WEIGHTED: u32 = 0xFFFF_FF02;
const TAG_STABILITY: u32 = 0xFFFF_FF03;
const KIND_PLANT: u32 = 3;

fn stream(seed: u64, tag: u32, point: usize, trial: usize, kind: u32) -> RandomStream {
    derive_stream(&SeedSpec::new(seed, vec![tag, point as u32, trial as u32, kind]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportRecoveryConfig {
    pub n: usize,
    pub m: usize,
    /// Relative excess sparsities `ε₀`. Values in `(-1, 0]` give control
    /// rows below the threshold.
    pub epsilon0_grid: Vec<f64>,
    pub model: AmplitudeModel,
    pub trials: usize,
    pub master_seed: u64,
    /// Plain-ℓ1 threshold `k₀/n`. When `None` it is estimated by a plain
    /// sweep with the same model, seed and trial count.
    pub threshold: Option<f64>,
    pub solver: SolverConfig,
    pub threads: Option<usize>,
}

impl SupportRecoveryConfig {
    pub fn new(n: usize, m: usize, epsilon0_grid: Vec<f64>, model: AmplitudeModel, master_seed: u64) -> Self {
        Self {
            n,
            m,
            epsilon0_grid,
            model,
            trials: 50,
            master_seed,
            threshold: None,
            solver: SolverConfig::default(),
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return invalid(format!("need 1 ≤ m < n, got m = {}, n = {}", self.m, self.n));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.epsilon0_grid.is_empty() {
            return invalid("epsilon0 grid is empty");
        }
        if let Some(e) = self.epsilon0_grid.iter().find(|e| !(e.is_finite() && **e > -1.0)) {
            return invalid(format!("epsilon0 must be finite and above -1, got {e}"));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t <= 1.0) {
                return invalid(format!("threshold k0/n must lie in (0, 1], got {t}"));
            }
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        self.model.validate()?;
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRecoveryRow {
    pub epsilon0: f64,
    pub k: usize,
    pub trials: usize,
    pub mean_overlap: f64,
    /// Trials whose estimated support is exactly the true one.
    pub exact: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportRecoveryTable {
    pub k0: usize,
    pub threshold: f64,
    pub rows: Vec<SupportRecoveryRow>,
}

/// Mean overlap between the true support and the `k` largest entries of the
/// stage-1 ℓ1 solution, at `k = round((1 + ε₀)·k₀)`.
pub fn run_support_recovery_experiment(cfg: &SupportRecoveryConfig) -> Result<SupportRecoveryTable> {
    cfg.validate()?;
    let threshold = match cfg.threshold {
        Some(t) => t,
        None => plain_threshold(cfg.n, cfg.m, cfg.model, cfg.trials, cfg.master_seed, &cfg.solver, cfg.threads)?,
    };
    let k0 = ((threshold * cfg.n as f64).round() as usize).max(1);
    let ks: Vec<usize> = cfg.epsilon0_grid.iter().map(|e| ((1.0 + e) * k0 as f64).round() as usize).collect();
    if let Some(&k) = ks.iter().find(|&&k| k > cfg.n || k == 0) {
        return invalid(format!("epsilon0 grid gives k = {k} outside [1, {}]", cfg.n));
    }

    let jobs: Vec<(usize, usize)> = (0..ks.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let overlaps: Vec<f64> = with_pool(cfg.threads, || {
        jobs.par_iter().map(|&(p, t)| support_trial(cfg, p, ks[p], t)).collect::<Result<Vec<_>>>()
    })??;

    let rows = cfg
        .epsilon0_grid
        .iter()
        .zip(&ks)
        .zip(overlaps.chunks(cfg.trials))
        .map(|((&epsilon0, &k), chunk)| SupportRecoveryRow {
            epsilon0,
            k,
            trials: cfg.trials,
            mean_overlap: chunk.iter().sum::<f64>() / chunk.len() as f64,
            exact: chunk.iter().filter(|&&o| o == 1.0).count(),
        })
        .collect();
    Ok(SupportRecoveryTable { k0, threshold, rows })
}

fn support_trial(cfg: &SupportRecoveryConfig, point: usize, k: usize, trial: usize) -> Result<f64> {
    let s = |kind| stream(cfg.master_seed, TAG_SUPPORT, point, trial, kind);
    let a = gen_gaussian_matrix(cfg.m, cfg.n, &mut s(KIND_MATRIX))?;
    let w = gen_weight_diagonal(cfg.n, &mut s(KIND_WEIGHTS))?;
    let signal = gen_sparse_signal(cfg.n, k, cfg.model, &mut s(KIND_SIGNAL))?;
    let y = a.mul_vec(&apply_forward(&signal.densify(), &w)?)?;
    let x_hat = ConstraintFactor::new(&a)?.basis_pursuit(&y, &cfg.solver)?.solution;
    support_overlap(&signal.support, &supp_k(&x_hat, k)?)
}

/// Empirical plain-ℓ1 threshold `k/n` from a sweep over the default grid.
fn plain_threshold(
    n: usize,
    m: usize,
    model: AmplitudeModel,
    trials: usize,
    master_seed: u64,
    solver: &SolverConfig,
    threads: Option<usize>,
) -> Result<f64> {
    let mut sweep = SweepConfig::new(n, m, Algorithm::Plain, model, master_seed);
    sweep.trials = trials;
    sweep.solver = solver.clone();
    sweep.threads = threads;
    sweep.k_grid = default_k_grid(n, 0.05, 0.35);
    estimate_threshold(&run_sweep(&sweep)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedThresholdConfig {
    pub n: usize,
    pub m: usize,
    /// Fraction of indices in the planted set `L`.
    pub gamma1: f64,
    /// Fraction of `L` that is nonzero.
    pub f1: f64,
    /// Fraction of the complement of `L` that is nonzero.
    pub f2: f64,
    pub omega: f64,
    pub model: AmplitudeModel,
    pub trials: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
    pub threads: Option<usize>,
}

impl WeightedThresholdConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, m: usize, gamma1: f64, f1: f64, f2: f64, omega: f64, master_seed: u64) -> Self {
        Self {
            n,
            m,
            gamma1,
            f1,
            f2,
            omega,
            model: AmplitudeModel::standard_gaussian(),
            trials: 50,
            master_seed,
            solver: SolverConfig::default(),
            threads: None,
        }
    }

    /// `(|L|, nonzeros on L, nonzeros off L)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        let n = self.n as f64;
        let size_l = (self.gamma1 * n).round() as usize;
        // Counts are taken from the rounded |L| so that f1 = 1 fills L.
        let on = (self.f1 * size_l as f64 - 1e-9).ceil().max(0.0) as usize;
        let off = (self.f2 * (self.n - size_l) as f64 + 1e-9).floor() as usize;
        (size_l, on, off)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return invalid(format!("need 1 ≤ m < n, got m = {}, n = {}", self.m, self.n));
        }
        if !(self.gamma1 > 0.0 && self.gamma1 < 1.0) {
            return invalid(format!("gamma1 must lie in (0, 1), got {}", self.gamma1));
        }
        for (name, f) in [("f1", self.f1), ("f2", self.f2)] {
            if !(0.0..=1.0).contains(&f) {
                return invalid(format!("{name} must lie in [0, 1], got {f}"));
            }
        }
        let (size_l, on, off) = self.counts();
        if on > size_l || off > self.n - size_l || on + off == 0 {
            return invalid(format!(
                "infeasible plant: {on} nonzeros on |L| = {size_l}, {off} on the remaining {}",
                self.n - size_l
            ));
        }
        if !(self.omega >= 1.0 && self.omega.is_finite()) {
            return invalid(format!("omega must be at least 1, got {}", self.omega));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        self.model.validate()?;
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedThresholdResult {
    pub size_l: usize,
    pub nonzeros_on_l: usize,
    pub nonzeros_off_l: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// Success fraction of weighted ℓ1 (1 on a planted `L`, `ω` elsewhere) for
/// signals concentrated on `L`.
pub fn run_weighted_threshold_experiment(cfg: &WeightedThresholdConfig) -> Result<WeightedThresholdResult> {
    cfg.validate()?;
    let (size_l, on, off) = cfg.counts();
    let outcomes: Vec<bool> = with_pool(cfg.threads, || {
        (0..cfg.trials).into_par_iter().map(|t| weighted_trial(cfg, t)).collect::<Result<Vec<_>>>()
    })??;
    let successes = outcomes.iter().filter(|&&s| s).count();
    Ok(WeightedThresholdResult {
        size_l,
        nonzeros_on_l: on,
        nonzeros_off_l: off,
        trials: cfg.trials,
        successes,
        success_rate: successes as f64 / cfg.trials as f64,
    })
}

fn weighted_trial(cfg: &WeightedThresholdConfig, trial: usize) -> Result<bool> {
    let (size_l, on, off) = cfg.counts();
    let s = |kind| stream(cfg.master_seed, TAG_WEIGHTED, 0, trial, kind);
    let a = gen_gaussian_matrix(cfg.m, cfg.n, &mut s(KIND_MATRIX))?;

    let mut plant = s(KIND_PLANT);
    let perm = index::sample(&mut plant, cfg.n, cfg.n).into_vec();
    let (in_l, out_l) = perm.split_at(size_l);
    let mut signal = s(KIND_SIGNAL);
    let mut x = vec![0.0; cfg.n];
    for (set, count) in [(in_l, on), (out_l, off)] {
        for pos in index::sample(&mut signal, set.len(), count) {
            x[set[pos]] = cfg.model.draw(&mut signal);
        }
    }

    let mut weights = vec![cfg.omega; cfg.n];
    for &i in in_l {
        weights[i] = 1.0;
    }
    let y = a.mul_vec(&x)?;
    let report = ConstraintFactor::new(&a)?.weighted_basis_pursuit(&y, &weights, &cfg.solver)?;
    Ok(report.converged && is_success(squared_error(&x, &report.solution)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub n: usize,
    pub m: usize,
    /// Backoff `ϖ` from the threshold; `C = 1/√(1−ϖ)`.
    pub varpi: f64,
    /// Plain-ℓ1 threshold `μ_W`. When `None` it is estimated by a plain
    /// sweep with Gaussian nonzeros, the same seed and trial count.
    pub threshold: Option<f64>,
    /// Standard deviation of the entries outside `K`.
    pub tail_sigma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
    pub threads: Option<usize>,
}

impl StabilityConfig {
    pub fn new(n: usize, m: usize, varpi: f64, master_seed: u64) -> Self {
        Self {
            n,
            m,
            varpi,
            threshold: None,
            tail_sigma: 1e-3,
            trials: 100,
            master_seed,
            solver: SolverConfig::default(),
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return invalid(format!("need 1 ≤ m < n, got m = {}, n = {}", self.m, self.n));
        }
        if !(self.varpi > 0.0 && self.varpi < 1.0) {
            return invalid(format!("varpi must lie in (0, 1), got {}", self.varpi));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t <= 1.0) {
                return invalid(format!("threshold must lie in (0, 1], got {t}"));
            }
        }
        if !(self.tail_sigma >= 0.0 && self.tail_sigma.is_finite()) {
            return invalid(format!("tail sigma must be finite and non-negative, got {}", self.tail_sigma));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityResult {
    pub c: f64,
    pub threshold: f64,
    /// `|K| = ⌊(1−ϖ)·threshold·n⌋`
    pub k: usize,
    pub trials: usize,
    /// Trials in which both stability inequalities hold.
    pub holds: usize,
}

/// Checks the ℓ1 stability inequalities at `C = 1/√(1−ϖ)` for signals with
/// Gaussian entries on a random `K` and a small Gaussian tail elsewhere.
pub fn run_stability_experiment(cfg: &StabilityConfig) -> Result<StabilityResult> {
    cfg.validate()?;
    let threshold = match cfg.threshold {
        Some(t) => t,
        None => plain_threshold(
            cfg.n,
            cfg.m,
            AmplitudeModel::standard_gaussian(),
            cfg.trials,
            cfg.master_seed,
            &cfg.solver,
            cfg.threads,
        )?,
    };
    let c = scaling_law_c(cfg.varpi)?;
    let k = ((1.0 - cfg.varpi) * threshold * cfg.n as f64 + 1e-9).floor() as usize;
    if k == 0 {
        return invalid("the scaled support size is zero");
    }
    let outcomes: Vec<bool> = with_pool(cfg.threads, || {
        (0..cfg.trials).into_par_iter().map(|t| stability_trial(cfg, k, c, t)).collect::<Result<Vec<_>>>()
    })??;
    let holds = outcomes.iter().filter(|&&h| h).count();
    Ok(StabilityResult { c, threshold, k, trials: cfg.trials, holds })
}

fn stability_trial(cfg: &StabilityConfig, k: usize, c: f64, trial: usize) -> Result<bool> {
    let s = |kind| stream(cfg.master_seed, TAG_STABILITY, 0, trial, kind);
    let a = gen_gaussian_matrix(cfg.m, cfg.n, &mut s(KIND_MATRIX))?;
    let head = gen_sparse_signal(cfg.n, k, AmplitudeModel::standard_gaussian(), &mut s(KIND_SIGNAL))?;
    let mut x = sample_gaussian(&mut s(KIND_PLANT), cfg.n)?;
    x.iter_mut().for_each(|v| *v *= cfg.tail_sigma);
    for (&i, &v) in head.support.iter().zip(&head.values) {
        x[i] = v;
    }
    let y = a.mul_vec(&x)?;
    let x_hat = ConstraintFactor::new(&a)?.basis_pursuit(&y, &cfg.solver)?.solution;
    Ok(verify_stability_bounds(&x, &x_hat, &head.support, c)?.holds)
}
