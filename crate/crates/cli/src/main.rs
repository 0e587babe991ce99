use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nics::harness::{
    curves, default_k_grid, estimate_threshold, read_csv, render_svg, run_stability_experiment,
    run_support_recovery_experiment, run_sweep, run_trial, run_weighted_threshold_experiment, write_csv, Algorithm,
    MatrixMode, StabilityConfig, SupportRecoveryConfig, SweepConfig, WeightedThresholdConfig,
};
use nics::sampling::{derive_stream, SeedSpec};
use nics::sensing::gen_gaussian_matrix;
use nics::signals::{gen_sparse_signal, AmplitudeModel};
use nics::solver::SolverConfig;
use nics::theory::check_null_space_condition;
use nics::Error;

#[derive(Parser)]
#[command(name = "nics", version, about = "Two-stage reweighted ℓ1 recovery for column-weighted sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate versus sparsity over a grid of k.
    Sweep(SweepArgs),
    /// Recover a single random instance and report its error.
    Solve(SolveArgs),
    /// Stage-1 support overlap above the plain threshold.
    SupportRecovery(SupportArgs),
    /// Weighted ℓ1 success rate for signals concentrated on a planted set.
    WeightedThreshold(WeightedArgs),
    /// Monte-Carlo check of the ℓ1 stability inequalities.
    CheckStability(StabilityArgs),
    /// Null-space condition for one random instance.
    CheckNullspace(NullspaceArgs),
    /// Estimate the 50% crossing of every curve in a sweep CSV.
    Threshold(ThresholdArgs),
    /// Draw the curves of one or more sweep CSVs as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    Plain,
    TwoStage,
    Both,
}

impl Alg {
    fn algorithms(self) -> Vec<Algorithm> {
        match self {
            Alg::Plain => vec![Algorithm::Plain],
            Alg::TwoStage => vec![Algorithm::TwoStage],
            Alg::Both => vec![Algorithm::Plain, Algorithm::TwoStage],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Matrices {
    Fresh,
    FixedPerK,
}

#[derive(Args)]
struct Problem {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Nonzero distribution: rademacher, gauss, cm(d) or gauss(s).
    #[arg(long, default_value = "rademacher", value_parser = parse_model)]
    dist: AmplitudeModel,
    /// Master seed; determines all randomness.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, value_enum, default_value = "both")]
    alg: Alg,
    #[arg(long, default_value_t = nics::pipeline::DEFAULT_OMEGA)]
    omega: f64,
    /// Smallest k; defaults to ⌈0.05·n⌉.
    #[arg(long)]
    k_min: Option<usize>,
    /// Largest k; defaults to ⌊0.35·n⌋.
    #[arg(long)]
    k_max: Option<usize>,
    /// Grid spacing; defaults to ⌈0.01·n⌉.
    #[arg(long)]
    k_step: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, default_value = "fresh")]
    matrices: Matrices,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "both")]
    alg: Alg,
    #[arg(long, default_value_t = nics::pipeline::DEFAULT_OMEGA)]
    omega: f64,
}

#[derive(Args)]
struct SupportArgs {
    #[command(flatten)]
    problem: Problem,
    /// Relative excess sparsities ε₀ over the plain threshold.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3", allow_hyphen_values = true)]
    eps: Vec<f64>,
    /// Plain threshold k/n; estimated by a plain sweep when absent.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct WeightedArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    gamma1: f64,
    #[arg(long)]
    f1: f64,
    #[arg(long)]
    f2: f64,
    #[arg(long, default_value_t = nics::pipeline::DEFAULT_OMEGA)]
    omega: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    varpi: f64,
    /// Plain threshold k/n; estimated by a plain sweep when absent.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    tail_sigma: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct NullspaceArgs {
    #[command(flatten)]
    problem: Problem,
    /// Size of K, the support of the drawn signal.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    c: f64,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_model(s: &str) -> Result<AmplitudeModel, String> {
    AmplitudeModel::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> nics::Result<()> {
    match command {
        Command::Sweep(args) => sweep(args),
        Command::Solve(args) => solve(args),
        Command::SupportRecovery(args) => support_recovery(args),
        Command::WeightedThreshold(args) => weighted_threshold(args),
        Command::CheckStability(args) => check_stability(args),
        Command::CheckNullspace(args) => check_nullspace(args),
        Command::Threshold(args) => threshold(args),
        Command::Plot(args) => plot(args),
    }
}

fn k_grid(args: &SweepArgs) -> nics::Result<Vec<usize>> {
    let n = args.problem.n;
    let default = default_k_grid(n, 0.05, 0.35);
    let lo = args.k_min.or(default.first().copied()).unwrap_or(1);
    let hi = args.k_max.or(default.last().copied()).unwrap_or(n);
    let step = args.k_step.unwrap_or_else(|| ((0.01 * n as f64).ceil() as usize).max(1));
    if step == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("empty k grid {lo}..{hi} step {step}")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn sweep_config(p: &Problem, algorithm: Algorithm) -> SweepConfig {
    SweepConfig::new(p.n, p.m, algorithm, p.dist, p.seed)
}

fn sweep(args: SweepArgs) -> nics::Result<()> {
    let grid = k_grid(&args)?;
    let mut results = Vec::new();
    for algorithm in args.alg.algorithms() {
        let mut cfg = sweep_config(&args.problem, algorithm);
        cfg.k_grid = grid.clone();
        cfg.trials = args.trials;
        cfg.omega = args.omega;
        cfg.threads = args.threads;
        cfg.matrix_mode = match args.matrices {
            Matrices::Fresh => MatrixMode::FreshPerTrial,
            Matrices::FixedPerK => MatrixMode::FixedPerK,
        };
        let result = run_sweep(&cfg)?;
        for row in &result.rows {
            eprintln!(
                "{} k={} success_rate={} mean_overlap={:.4}",
                algorithm.label(),
                row.k,
                row.success_rate,
                row.mean_overlap
            );
        }
        match estimate_threshold(&result) {
            Ok(t) => eprintln!("{} threshold k/n = {t:.4}", algorithm.label()),
            Err(e) => eprintln!("{} threshold: {e}", algorithm.label()),
        }
        results.push(result);
    }
    match &args.out {
        Some(path) => write_csv(&results, BufWriter::new(File::create(path)?)),
        None => write_csv(&results, io::stdout().lock()),
    }
}

fn solve(args: SolveArgs) -> nics::Result<()> {
    for algorithm in args.alg.algorithms() {
        let mut cfg = sweep_config(&args.problem, algorithm);
        cfg.k_grid = vec![args.k];
        cfg.trials = 1;
        cfg.omega = args.omega;
        let outcome = run_trial(&cfg, args.k, 0)?;
        println!(
            "{} squared_error={:e} success={} overlap={} converged={}",
            algorithm.label(),
            outcome.squared_error,
            outcome.success,
            outcome.overlap,
            outcome.converged
        );
    }
    Ok(())
}

fn support_recovery(args: SupportArgs) -> nics::Result<()> {
    let p = &args.problem;
    let mut cfg = SupportRecoveryConfig::new(p.n, p.m, args.eps, p.dist, p.seed);
    cfg.threshold = args.threshold;
    cfg.trials = args.trials;
    cfg.threads = args.threads;
    let table = run_support_recovery_experiment(&cfg)?;
    println!("# threshold k0/n = {}, k0 = {}", table.threshold, table.k0);
    println!("epsilon0,k,trials,mean_overlap,exact");
    for r in &table.rows {
        println!("{},{},{},{:.6},{}", r.epsilon0, r.k, r.trials, r.mean_overlap, r.exact);
    }
    Ok(())
}

fn weighted_threshold(args: WeightedArgs) -> nics::Result<()> {
    let p = &args.problem;
    let mut cfg = WeightedThresholdConfig::new(p.n, p.m, args.gamma1, args.f1, args.f2, args.omega, p.seed);
    cfg.model = p.dist;
    cfg.trials = args.trials;
    cfg.threads = args.threads;
    let r = run_weighted_threshold_experiment(&cfg)?;
    println!(
        "|L|={} on_L={} off_L={} successes={}/{} success_rate={}",
        r.size_l, r.nonzeros_on_l, r.nonzeros_off_l, r.successes, r.trials, r.success_rate
    );
    Ok(())
}

fn check_stability(args: StabilityArgs) -> nics::Result<()> {
    let mut cfg = StabilityConfig::new(args.n, args.m, args.varpi, args.seed);
    cfg.threshold = args.threshold;
    cfg.tail_sigma = args.tail_sigma;
    cfg.trials = args.trials;
    cfg.threads = args.threads;
    let r = run_stability_experiment(&cfg)?;
    println!(
        "C={:.6} threshold={:.4} |K|={} holds={}/{}",
        r.c, r.threshold, r.k, r.holds, r.trials
    );
    Ok(())
}

fn check_nullspace(args: NullspaceArgs) -> nics::Result<()> {
    let p = &args.problem;
    let a = gen_gaussian_matrix(p.m, p.n, &mut derive_stream(&SeedSpec::new(p.seed, vec![0])))?;
    let signal = gen_sparse_signal(p.n, args.k, p.dist, &mut derive_stream(&SeedSpec::new(p.seed, vec![1])))?;
    let verdict = check_null_space_condition(&a, &signal.densify(), &signal.support, args.c, &SolverConfig::default())?;
    println!(
        "holds={} min_value={:.9} reference={:.9}",
        verdict.holds, verdict.min_value, verdict.reference
    );
    Ok(())
}

fn load(paths: &[PathBuf]) -> nics::Result<Vec<nics::harness::CsvRow>> {
    let mut rows = Vec::new();
    for path in paths {
        rows.extend(read_csv(open(path)?)?);
    }
    Ok(rows)
}

fn open(path: &Path) -> nics::Result<File> {
    File::open(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn threshold(args: ThresholdArgs) -> nics::Result<()> {
    let rows = load(&args.input)?;
    let all = curves(&rows);
    if all.is_empty() {
        return Err(Error::NotFound("no curves in input".into()));
    }
    for curve in &all {
        match curve.threshold() {
            Ok(t) => println!("{}: {t:.6}", curve.label()),
            Err(e) => println!("{}: {e}", curve.label()),
        }
    }
    Ok(())
}

fn plot(args: PlotArgs) -> nics::Result<()> {
    let all = curves(&load(&args.input)?);
    if all.is_empty() {
        return Err(Error::NotFound("no curves in input".into()));
    }
    let mut out = BufWriter::new(File::create(&args.out)?);
    out.write_all(render_svg(&all).as_bytes())?;
    out.flush()?;
    Ok(())
}
