//! Monte-Carlo phase-transition experiments.
//!
//! Every random object of trial `t` at sparsity `k` comes from the stream
//! derived at `(master_seed, [k, t, object_kind])`. The plain and two-stage
//! algorithms therefore see the same `A` and `x_true` for a given
//! `(k, t)`, and results do not depend on the worker count.

mod csv;
mod experiments;
mod svg;

pub use self::csv::{curves, read_csv, write_csv, CsvRow, Curve, HEADER};
pub use experiments::{
    run_stability_experiment, run_support_recovery_experiment, run_weighted_threshold_experiment,
    StabilityConfig, StabilityResult, SupportRecoveryConfig, SupportRecoveryRow, SupportRecoveryTable,
    WeightedThresholdConfig, WeightedThresholdResult,
};
pub use svg::render_svg;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::pipeline::{recover_two_stage_factored, RecoveryConfig, DEFAULT_OMEGA};
use crate::sampling::{derive_stream, RandomStream, SeedSpec};
use crate::sensing::{apply_forward, gen_gaussian_matrix, gen_weight_diagonal, WeightDiagonal};
use crate::signals::{gen_sparse_signal, is_success, squared_error, supp_k, support_overlap, AmplitudeModel};
use crate::solver::{ConstraintFactor, SolverConfig};

pub(crate) const KIND_MATRIX: u32 = 0;
pub(crate) const KIND_WEIGHTS: u32 = 1;
pub(crate) const KIND_SIGNAL: u32 = 2;
// Trial label used for objects shared by all trials at one k.
const SHARED_TRIAL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Plain,
    TwoStage,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::TwoStage => "two-stage",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "two-stage" | "two_stage" => Ok(Self::TwoStage),
            _ => invalid(format!("unknown algorithm '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    /// New `A`, `W` and `x_true` for every trial.
    FreshPerTrial,
    /// One `A` and `W` per sparsity level, new `x_true` per trial.
    FixedPerK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub algorithm: Algorithm,
    pub model: AmplitudeModel,
    pub omega: f64,
    pub master_seed: u64,
    pub matrix_mode: MatrixMode,
    pub solver: SolverConfig,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(n: usize, m: usize, algorithm: Algorithm, model: AmplitudeModel, master_seed: u64) -> Self {
        Self {
            n,
            m,
            k_grid: default_k_grid(n, 0.05, 0.35),
            trials: 100,
            algorithm,
            model,
            omega: DEFAULT_OMEGA,
            master_seed,
            matrix_mode: MatrixMode::FreshPerTrial,
            solver: SolverConfig::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return invalid(format!("need 1 ≤ m < n, got m = {}, n = {}", self.m, self.n));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.k_grid.is_empty() {
            return invalid("k grid is empty");
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("k grid must be strictly ascending");
        }
        if self.k_grid[0] == 0 || *self.k_grid.last().unwrap() > self.n {
            return invalid(format!("k grid must lie within [1, {}]", self.n));
        }
        if self.k_grid.iter().any(|&k| k > u32::MAX as usize - 1) || self.trials > u32::MAX as usize - 1 {
            return invalid("k and trial indices must fit in 32-bit labels");
        }
        if !(self.omega >= 1.0 && self.omega.is_finite()) {
            return invalid(format!("omega must be at least 1, got {}", self.omega));
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        self.model.validate()?;
        self.solver.validate()
    }
}

/// Sparsity levels `⌈lo·n⌉, … ≤ hi·n` with spacing `⌈0.01·n⌉`.
pub fn default_k_grid(n: usize, lo: f64, hi: f64) -> Vec<usize> {
    let step = ((0.01 * n as f64).ceil() as usize).max(1);
    let start = ((lo * n as f64).ceil() as usize).max(1);
    let stop = ((hi * n as f64).floor() as usize).min(n);
    (start..=stop).step_by(step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub squared_error: f64,
    pub overlap: f64,
    pub converged: bool,
}

fn stream(cfg: &SweepConfig, k: usize, trial: u32, kind: u32) -> RandomStream {
    derive_stream(&SeedSpec::new(cfg.master_seed, vec![k as u32, trial, kind]))
}

// A (factored) and W for one trial, or shared across a k level.
struct Instance {
    factor: ConstraintFactor,
    weights: Option<WeightDiagonal>,
}

fn build_instance(cfg: &SweepConfig, k: usize, trial: u32) -> Result<Instance> {
    let a = gen_gaussian_matrix(cfg.m, cfg.n, &mut stream(cfg, k, trial, KIND_MATRIX))?;
    let factor = ConstraintFactor::new(&a)?;
    let weights = match cfg.algorithm {
        Algorithm::Plain => None,
        Algorithm::TwoStage => Some(gen_weight_diagonal(cfg.n, &mut stream(cfg, k, trial, KIND_WEIGHTS))?),
    };
    Ok(Instance { factor, weights })
}

fn trial_on(cfg: &SweepConfig, k: usize, trial_index: usize, inst: &Instance) -> Result<TrialOutcome> {
    let signal = gen_sparse_signal(cfg.n, k, cfg.model, &mut stream(cfg, k, trial_index as u32, KIND_SIGNAL))?;
    let x_true = signal.densify();
    let a = inst.factor.matrix();

    let (estimate, support_estimate, converged) = match &inst.weights {
        None => {
            let y = a.mul_vec(&x_true)?;
            let report = inst.factor.basis_pursuit(&y, &cfg.solver)?;
            let support = supp_k(&report.solution, k)?;
            (report.solution, support, report.converged)
        }
        Some(w) => {
            let y = a.mul_vec(&apply_forward(&x_true, w)?)?;
            let rcfg = RecoveryConfig { omega: cfg.omega, k, solver: cfg.solver.clone() };
            let outcome = recover_two_stage_factored(&inst.factor, w, &y, &rcfg)?;
            let converged = outcome.converged();
            (outcome.x_star, outcome.support_estimate, converged)
        }
    };

    let err = squared_error(&x_true, &estimate)?;
    let overlap = support_overlap(&signal.support, &support_estimate)?;
    Ok(TrialOutcome { success: converged && is_success(err), squared_error: err, overlap, converged })
}

/// One Monte-Carlo trial at sparsity `k`.
pub fn run_trial(cfg: &SweepConfig, k: usize, trial_index: usize) -> Result<TrialOutcome> {
    cfg.validate()?;
    if !cfg.k_grid.contains(&k) {
        return invalid(format!("k = {k} is not on the configured grid"));
    }
    if trial_index >= cfg.trials {
        return invalid(format!("trial index {trial_index} out of range"));
    }
    let label = match cfg.matrix_mode {
        MatrixMode::FreshPerTrial => trial_index as u32,
        MatrixMode::FixedPerK => SHARED_TRIAL,
    };
    let inst = build_instance(cfg, k, label)?;
    trial_on(cfg, k, trial_index, &inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub k_over_n: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean squared error over failed trials, if any failed.
    pub mean_failure_error: Option<f64>,
    pub mean_overlap: f64,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

fn aggregate(k: usize, n: usize, outcomes: &[TrialOutcome]) -> SweepRow {
    let trials = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    let failures: Vec<f64> = outcomes.iter().filter(|o| !o.success).map(|o| o.squared_error).collect();
    SweepRow {
        k,
        k_over_n: k as f64 / n as f64,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        mean_failure_error: (!failures.is_empty()).then(|| failures.iter().sum::<f64>() / failures.len() as f64),
        mean_overlap: outcomes.iter().map(|o| o.overlap).sum::<f64>() / trials as f64,
        unconverged: outcomes.iter().filter(|o| !o.converged).count(),
    }
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every `(k, trial)` pair of the grid and aggregates per `k`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    with_pool(cfg.threads, || sweep_in_pool(cfg))?
}

fn sweep_in_pool(cfg: &SweepConfig) -> Result<SweepResult> {
    let shared: Vec<Option<Instance>> = match cfg.matrix_mode {
        MatrixMode::FreshPerTrial => cfg.k_grid.iter().map(|_| None).collect(),
        MatrixMode::FixedPerK => cfg
            .k_grid
            .par_iter()
            .map(|&k| build_instance(cfg, k, SHARED_TRIAL).map(Some))
            .collect::<Result<_>>()?,
    };

    let jobs: Vec<(usize, usize)> =
        (0..cfg.k_grid.len()).flat_map(|ki| (0..cfg.trials).map(move |t| (ki, t))).collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(ki, t)| {
            let k = cfg.k_grid[ki];
            match &shared[ki] {
                Some(inst) => trial_on(cfg, k, t, inst),
                None => trial_on(cfg, k, t, &build_instance(cfg, k, t as u32)?),
            }
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .k_grid
        .iter()
        .zip(outcomes.chunks(cfg.trials))
        .map(|(&k, chunk)| aggregate(k, cfg.n, chunk))
        .collect();
    Ok(SweepResult { config: cfg.clone(), rows })
}

/// `k/n` at which the success rate first falls through 0.5, by linear
/// interpolation between neighbouring grid points.
pub fn estimate_threshold(result: &SweepResult) -> Result<f64> {
    let points: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.k_over_n, r.success_rate)).collect();
    estimate_threshold_from_points(&points)
}

pub fn estimate_threshold_from_points(points: &[(f64, f64)]) -> Result<f64> {
    for pair in points.windows(2) {
        let ((x0, r0), (x1, r1)) = (pair[0], pair[1]);
        if r0 >= 0.5 && r1 < 0.5 {
            return Ok(x0 + (r0 - 0.5) / (r0 - r1) * (x1 - x0));
        }
    }
    Err(Error::NotFound("success rate never falls through 0.5 on this grid".into()))
}

/// Indices `i` where the success rate rises from row `i` to `i + 1` by more
/// than three binomial standard deviations.
pub fn monotonicity_violations(rows: &[SweepRow]) -> Vec<usize> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let p = (w[0].success_rate + w[1].success_rate) / 2.0;
            let sd = (p * (1.0 - p) * (1.0 / w[0].trials as f64 + 1.0 / w[1].trials as f64)).sqrt();
            w[1].success_rate - w[0].success_rate > 3.0 * sd
        })
        .map(|(i, _)| i)
        .collect()
}
