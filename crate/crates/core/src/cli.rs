/*
Copyright 2026 The tenrec Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


//! The `tenrec` command line. [`run`] takes the argument list and returns
//! the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage or argument error |
//! | 2 | I/O or file-format error |
//! | 3 | numerical failure inside a solver |
//! | 4 | no convergence under `--strict` |
//!
//! `TENREC_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{rpca_unfold_recover, snn_recover, RpcaConfig, SnnConfig, RPCA_DEFAULT_RHO};
use crate::error::{Error, Result};
use crate::io::{
    read_tensor, write_metrics_csv, write_phase_cells_csv, write_phase_pgm, write_tensor, Manifest,
};
use crate::pasd::{
    certificate_from_gap, default_lambdas, feasible_point_objective, pasd_recover, rank_bound,
    PasdConfig, RecoveryResult, Schedule, DEFAULT_EPS, DEFAULT_MAXITER, DEFAULT_MU0,
    DEFAULT_MU_MAX, DEFAULT_RHO,
};
use crate::synth::{
    checksum, corrupt, gen_lowrank_tucker, phase_transition_sweep, rse, run_table_benchmark,
    CorruptionMode, Method, MethodSolver, PhaseGridSpec, Solver, SynthSpec,
    DEFAULT_RSE_THRESHOLD,
};
use crate::tensor::DenseTensor;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

pub const THREADS_ENV: &str = "TENREC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "tenrec", version, about = "Tensor robust PCA: low-rank plus sparse recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an observed tensor into low-rank and sparse parts.
    Recover(RecoverArgs),
    /// Generate a low-Tucker-rank tensor and a corrupted copy.
    Synth(SynthArgs),
    /// Average RSE and time per solver over seeded trials, written as CSV.
    Bench(BenchArgs),
    /// Success-rate grid over rank and corruption, written as PGM.
    Phase(PhaseArgs),
    /// Recompute the suboptimality certificate of a finished PASD run.
    Certify(CertifyArgs),
    /// Print the default solver settings as key=value lines.
    Defaults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Pasd,
    Snn,
    Rpca,
}

impl From<SolverArg> for Method {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Pasd => Method::Pasd,
            SolverArg::Snn => Method::Snn,
            SolverArg::Rpca => Method::Rpca,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Initial penalty (rpca: 1.25 / spectral norm when omitted).
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MU_MAX)]
    pub mu_max: f64,
    /// Penalty growth factor (rpca: 1.5 when omitted).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Stop once every residual's max-abs entry is below this.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_MAXITER)]
    pub maxiter: usize,
}

impl ScheduleArgs {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            mu0: self.mu0.unwrap_or(DEFAULT_MU0),
            mu_max: self.mu_max,
            rho: self.rho.unwrap_or(DEFAULT_RHO),
            eps: self.eps,
            maxiter: self.maxiter,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    /// Observed tensor (TNSR).
    #[arg(long, required_unless_present = "from_manifest")]
    pub input: Option<PathBuf>,
    /// Output directory for x.tnsr, e.tnsr, gap.tnsr and run.manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Pasd)]
    pub solver: SolverArg,
    /// Rank bounds R_n (pasd), comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "target_ranks")]
    pub ranks: Option<Vec<usize>>,
    /// Target ranks r_n; pasd then uses R_n = floor(1.2 r_n).
    #[arg(long, value_delimiter = ',')]
    pub target_ranks: Option<Vec<usize>>,
    /// Nuclear-norm weights (default sqrt(max(I_n, prod_{m!=n} I_m)) / N).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Weights for averaging the per-mode estimates (default: lambdas).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Sparse weight for rpca (default 1/sqrt(max dim) per unfolding).
    #[arg(long)]
    pub rpca_lambda: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Ground truth (TNSR); adds the RSE to the manifest.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Seed of the instance, recorded in the manifest.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit with code 4 when the solver does not converge.
    #[arg(long)]
    pub strict: bool,
    /// Take every run parameter from an earlier run.manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// Tucker ranks r_n; a single value applies to every mode.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    /// Fraction of corrupted entries.
    #[arg(long, default_value_t = 0.05)]
    pub corruption: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overwrite corrupted entries with U[LOW, HIGH] values instead of adding U[-1, 1].
    #[arg(long, value_delimiter = ',', num_args = 2, value_names = ["LOW", "HIGH"])]
    pub replace_range: Option<Vec<f64>>,
    /// Output directory for truth.tnsr, observed.tnsr and synth.manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    pub corruption: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverArg::Pasd, SolverArg::Snn, SolverArg::Rpca])]
    pub solvers: Vec<SolverArg>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAXITER)]
    pub maxiter: usize,
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// Rank axis (default 2, 4, ..., 50).
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Corruption axis (default 0.02, 0.04, ..., 0.5).
    #[arg(long, value_delimiter = ',')]
    pub corruption: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_RSE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Pasd)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAXITER)]
    pub maxiter: usize,
    /// PGM output; the axes go next to it as <stem>.axes.csv.
    #[arg(long, default_value = "phase.pgm")]
    pub out: PathBuf,
    /// Optional per-cell CSV.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// run.manifest of a converged pasd run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Observed tensor (default: the manifest's input).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Multiplier gap tensor (default: the manifest's gap path).
    #[arg(long)]
    pub gap: Option<PathBuf>,
    /// Ground truth; adds the objective of the feasible point it induces.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// Maps library errors onto exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) => EXIT_USAGE,
        Error::Io { .. } | Error::Format { .. } | Error::Csv(_) => EXIT_IO,
        Error::Numerical { .. } | Error::State(_) => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::arg(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // A pool may already exist when run() is called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Recover(a) => recover(a),
        Command::Synth(a) => synth(a).map(|_| EXIT_OK),
        Command::Bench(a) => bench(a).map(|_| EXIT_OK),
        Command::Phase(a) => phase(a).map(|_| EXIT_OK),
        Command::Certify(a) => certify(a).map(|_| EXIT_OK),
        Command::Defaults => {
            print!("{}", defaults_manifest().to_text());
            Ok(EXIT_OK)
        }
    }
}

/// Defaults the `recover` subcommand applies when no flag overrides them.
pub fn defaults_manifest() -> Manifest {
    let s = Schedule::default();
    let mut m = Manifest::new();
    m.set_f64("mu0", s.mu0)
        .set_f64("mu_max", s.mu_max)
        .set_f64("rho", s.rho)
        .set_f64("eps", s.eps)
        .set("maxiter", s.maxiter)
        .set_f64("rpca_rho", RPCA_DEFAULT_RHO)
        .set("lambda_rule", "sqrt(max(I_n, prod_{m!=n} I_m)) / N")
        .set("rank_rule", "R_n = floor(1.2 r_n)");
    m
}

fn broadcast(values: &[usize], order: usize, what: &str) -> Result<Vec<usize>> {
    match values.len() {
        1 => Ok(vec![values[0]; order]),
        n if n == order => Ok(values.to_vec()),
        n => Err(Error::arg(format!("expected 1 or {order} {what}, got {n}"))),
    }
}

/// Fully resolved parameters of a `recover` run.
#[derive(Debug, Clone)]
struct RecoverPlan {
    solver: SolverArg,
    input: PathBuf,
    truth: Option<PathBuf>,
    seed: Option<u64>,
    ranks: Option<Vec<usize>>,
    lambdas: Vec<f64>,
    weights: Option<Vec<f64>>,
    rpca_lambda: Option<f64>,
    rpca_mu0: Option<f64>,
    schedule: Schedule,
}

fn plan_from_args(a: &RecoverArgs, dims: &[usize]) -> Result<RecoverPlan> {
    let order = dims.len();
    let ranks = match (&a.ranks, &a.target_ranks) {
        (Some(r), _) => Some(broadcast(r, order, "ranks")?),
        (None, Some(t)) => Some(
            broadcast(t, order, "target ranks")?
                .into_iter()
                .map(rank_bound)
                .collect(),
        ),
        (None, None) => None,
    };
    if a.solver == SolverArg::Pasd && ranks.is_none() {
        return Err(Error::arg("pasd needs --ranks or --target-ranks"));
    }
    let mut schedule = a.schedule.schedule();
    if a.solver == SolverArg::Rpca {
        schedule.rho = a.schedule.rho.unwrap_or(RPCA_DEFAULT_RHO);
    }
    Ok(RecoverPlan {
        solver: a.solver,
        input: a.input.clone().expect("clap enforces --input"),
        truth: a.truth.clone(),
        seed: a.seed,
        ranks,
        lambdas: a.lambdas.clone().unwrap_or_else(|| default_lambdas(dims)),
        weights: a.weights.clone(),
        rpca_lambda: a.rpca_lambda,
        rpca_mu0: a.schedule.mu0,
        schedule,
    })
}

fn plan_from_manifest(path: &Path) -> Result<RecoverPlan> {
    let m = Manifest::read(path)?;
    let solver = SolverArg::from_str(&m.parse::<String>("solver")?, false).map_err(Error::arg)?;
    let opt = |key: &str| m.get(key).filter(|v| !v.is_empty());
    Ok(RecoverPlan {
        solver,
        input: PathBuf::from(m.parse::<String>("input")?),
        truth: opt("truth").map(PathBuf::from),
        seed: opt("seed").map(|_| m.parse("seed")).transpose()?,
        ranks: opt("ranks").map(|_| m.parse_list("ranks")).transpose()?,
        lambdas: m.parse_list("lambdas")?,
        weights: opt("weights").map(|_| m.parse_list("weights")).transpose()?,
        rpca_lambda: opt("rpca_lambda").map(|_| m.parse("rpca_lambda")).transpose()?,
        rpca_mu0: opt("rpca_mu0").map(|_| m.parse("rpca_mu0")).transpose()?,
        schedule: Schedule {
            mu0: m.parse("mu0")?,
            mu_max: m.parse("mu_max")?,
            rho: m.parse("rho")?,
            eps: m.parse("eps")?,
            maxiter: m.parse("maxiter")?,
        },
    })
}

fn hex(x: u64) -> String {
    format!("{x:016x}")
}

fn execute(plan: &RecoverPlan, t: &DenseTensor) -> Result<(RecoveryResult, Option<PasdConfig>)> {
    match plan.solver {
        SolverArg::Pasd => {
            let config = PasdConfig {
                lambdas: plan.lambdas.clone(),
                ranks: plan.ranks.clone().expect("pasd plan has ranks"),
                schedule: plan.schedule.clone(),
                output_weights: plan.weights.clone(),
            };
            Ok((pasd_recover(t, &config)?, Some(config)))
        }
        SolverArg::Snn => {
            let config = SnnConfig {
                lambdas: plan.lambdas.clone(),
                schedule: plan.schedule.clone(),
                output_weights: plan.weights.clone(),
            };
            Ok((snn_recover(t, &config)?, None))
        }
        SolverArg::Rpca => {
            let config = RpcaConfig {
                lambda: plan.rpca_lambda,
                mu0: plan.rpca_mu0,
                rho: plan.schedule.rho,
                mu_max: plan.schedule.mu_max,
                eps: plan.schedule.eps,
                maxiter: plan.schedule.maxiter,
            };
            Ok((rpca_unfold_recover(t, &config)?, None))
        }
    }
}

fn recover(a: RecoverArgs) -> Result<i32> {
    let plan = match &a.from_manifest {
        Some(p) => plan_from_manifest(p)?,
        None => {
            let input = a.input.clone().expect("clap enforces --input");
            let dims = read_tensor(&input)?.dims().to_vec();
            plan_from_args(&a, &dims)?
        }
    };
    let t = read_tensor(&plan.input)?;
    if let Some(r) = &plan.ranks {
        if plan.solver == SolverArg::Pasd {
            PasdConfig {
                lambdas: plan.lambdas.clone(),
                ranks: r.clone(),
                schedule: plan.schedule.clone(),
                output_weights: plan.weights.clone(),
            }
            .validate(t.dims())?;
        }
    }
    let truth = plan.truth.as_ref().map(read_tensor).transpose()?;

    let start = Instant::now();
    let (result, pasd_config) = execute(&plan, &t)?;
    let seconds = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let x_path = a.out_dir.join("x.tnsr");
    let e_path = a.out_dir.join("e.tnsr");
    write_tensor(&result.x, &x_path)?;
    write_tensor(&result.e, &e_path)?;
    let gap_path = match (&pasd_config, &result.duals) {
        (Some(_), Some(d)) => {
            let p = a.out_dir.join("gap.tnsr");
            write_tensor(&d.gap(), &p)?;
            Some(p)
        }
        _ => None,
    };

    let mut m = Manifest::new();
    m.set("solver", Method::from(plan.solver).label())
        .set("input", plan.input.display())
        .set("input_checksum", hex(checksum(&t)))
        .set_list("dims", t.dims())
        .set("truth", plan.truth.as_ref().map_or(String::new(), |p| p.display().to_string()))
        .set("seed", plan.seed.map_or(String::new(), |s| s.to_string()))
        .set("ranks", plan.ranks.as_ref().map_or(String::new(), |r| {
            r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }))
        .set_f64_list("lambdas", &plan.lambdas);
    match &plan.weights {
        Some(w) => m.set_f64_list("weights", w),
        None => m.set("weights", ""),
    };
    m.set("rpca_lambda", plan.rpca_lambda.map_or(String::new(), |v| format!("{v:.16e}")))
        .set("rpca_mu0", plan.rpca_mu0.map_or(String::new(), |v| format!("{v:.16e}")))
        .set_f64("mu0", plan.schedule.mu0)
        .set_f64("mu_max", plan.schedule.mu_max)
        .set_f64("rho", plan.schedule.rho)
        .set_f64("eps", plan.schedule.eps)
        .set("maxiter", plan.schedule.maxiter)
        .set("x_path", x_path.display())
        .set("e_path", e_path.display())
        .set("gap_path", gap_path.as_ref().map_or(String::new(), |p| p.display().to_string()))
        .set("x_checksum", hex(checksum(&result.x)))
        .set_f64("solve_seconds", seconds)
        .set("iters", result.iters)
        .set("converged", result.converged)
        .set_f64("final_residual", result.final_residual())
        .set_f64_list("residual_history", &result.residual_history)
        .set_f64("objective", result.objective);
    if let Some(c) = &result.certificate {
        m.set_f64("epsilon_hat", c.epsilon_hat)
            .set_f64("c", c.c)
            .set_f64("bound", c.bound);
    }
    let rse_value = truth.as_ref().map(|t0| rse(&result.x, t0)).transpose()?;
    if let Some(v) = rse_value {
        m.set_f64("rse", v);
    }
    m.write(a.out_dir.join("run.manifest"))?;

    println!(
        "solver={} iters={} converged={} final_residual={:.3e} time={seconds:.3}s",
        Method::from(plan.solver).label(),
        result.iters,
        result.converged,
        result.final_residual()
    );
    if let Some(v) = rse_value {
        println!("rse={v:.6e}");
    }
    if a.strict && !result.converged {
        eprintln!("error: solver did not converge within {} iterations", plan.schedule.maxiter);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

fn synth(a: SynthArgs) -> Result<()> {
    let order = a.dims.len();
    let spec = SynthSpec {
        dims: a.dims.clone(),
        ranks: broadcast(&a.ranks, order, "ranks")?,
        corruption_fraction: a.corruption,
        seed: a.seed,
    };
    let mode = match a.replace_range.as_deref() {
        None => CorruptionMode::Additive,
        Some(&[low, high]) => CorruptionMode::Replace { low, high },
        Some(_) => return Err(Error::arg("--replace-range takes LOW,HIGH")),
    };
    let truth = gen_lowrank_tucker(&spec)?;
    let (observed, positions) = corrupt(&truth, spec.corruption_fraction, spec.seed, mode)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let truth_path = a.out_dir.join("truth.tnsr");
    let observed_path = a.out_dir.join("observed.tnsr");
    write_tensor(&truth, &truth_path)?;
    write_tensor(&observed, &observed_path)?;
    let mut m = Manifest::new();
    m.set_list("dims", &spec.dims)
        .set_list("ranks", &spec.ranks)
        .set_f64("corruption", spec.corruption_fraction)
        .set("corruption_mode", match mode {
            CorruptionMode::Additive => "additive".to_string(),
            CorruptionMode::Replace { low, high } => format!("replace:{low}:{high}"),
        })
        .set("corrupted_entries", positions.len())
        .set("seed", spec.seed)
        .set("truth", truth_path.display())
        .set("truth_checksum", hex(checksum(&truth)))
        .set("observed", observed_path.display())
        .set("observed_checksum", hex(checksum(&observed)));
    m.write(a.out_dir.join("synth.manifest"))?;
    println!(
        "wrote {} and {} ({} corrupted entries)",
        truth_path.display(),
        observed_path.display(),
        positions.len()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let ranks = broadcast(&a.ranks, a.dims.len(), "ranks")?;
    let solvers: Vec<MethodSolver> = a
        .solvers
        .iter()
        .map(|&s| MethodSolver::new(s.into()).with_maxiter(a.maxiter))
        .collect();
    let refs: Vec<&dyn Solver> = solvers.iter().map(|s| s as &dyn Solver).collect();
    let rows = run_table_benchmark(&a.dims, &ranks, &a.corruption, &refs, a.trials, a.seed)?;
    write_metrics_csv(&rows, &a.out)?;
    for r in &rows {
        println!(
            "{:>5} rho={:.2} rse={:.3e} time={:.3}s converged={:.2} failed={}",
            r.solver, r.rho, r.mean_rse, r.mean_time_s, r.converged_frac, r.failed
        );
    }
    Ok(())
}

fn phase(a: PhaseArgs) -> Result<()> {
    let mut grid = PhaseGridSpec::full_grid(a.dims.clone(), a.seed);
    if let Some(r) = a.ranks {
        grid.rank_axis = r;
    }
    if let Some(c) = a.corruption {
        grid.corruption_axis = c;
    }
    grid.trials = a.trials;
    grid.rse_threshold = a.threshold;
    let solver = MethodSolver::new(a.solver.into()).with_maxiter(a.maxiter);
    let out = phase_transition_sweep(&grid, &solver)?;
    write_phase_pgm(&out, &a.out)?;
    if let Some(cells) = &a.cells {
        write_phase_cells_csv(&out, cells)?;
    }
    for (rho, row) in out.corruption_axis.iter().zip(&out.success_counts) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>3}")).collect();
        println!("rho={rho:.2} {}", cells.join(""));
    }
    Ok(())
}

fn certify(a: CertifyArgs) -> Result<()> {
    let m = Manifest::read(&a.manifest)?;
    if m.get("solver") != Some("pasd") {
        return Err(Error::arg("certify needs the manifest of a pasd run"));
    }
    if !m.parse::<bool>("converged")? {
        return Err(Error::State("the run did not converge; no certificate exists".into()));
    }
    let input = a.input.unwrap_or_else(|| PathBuf::from(m.get("input").unwrap_or_default()));
    let gap_path = a
        .gap
        .unwrap_or_else(|| PathBuf::from(m.get("gap_path").unwrap_or_default()));
    let t = read_tensor(&input)?;
    let gap = read_tensor(&gap_path)?;
    gap.check_same_dims(&t)?;
    let lambdas: Vec<f64> = m.parse_list("lambdas")?;
    let ranks: Vec<usize> = m.parse_list("ranks")?;
    let schedule = Schedule {
        mu0: m.parse("mu0")?,
        mu_max: m.parse("mu_max")?,
        rho: m.parse("rho")?,
        eps: m.parse("eps")?,
        maxiter: m.parse("maxiter")?,
    };
    let iters: usize = m.parse("iters")?;
    let cert = certificate_from_gap(&gap, &t, &lambdas, &schedule, iters);
    let limit = 1.0 + lambdas.iter().sum::<f64>();
    println!("epsilon_hat={:.16e}", cert.epsilon_hat);
    println!("epsilon_hat_limit={limit:.16e}");
    println!("c={:.16e}", cert.c);
    println!("bound={:.16e}", cert.bound);
    if let Ok(stored) = m.parse::<f64>("bound") {
        println!("stored_bound={stored:.16e}");
    }
    let objective: f64 = m.parse("objective")?;
    println!("objective={objective:.16e}");
    if let Some(p) = a.truth {
        let t0 = read_tensor(&p)?;
        let feasible = feasible_point_objective(&t, &t0, &lambdas, &ranks)?;
        println!("feasible_objective={feasible:.16e}");
        println!("objective_within_bound={}", objective <= feasible + cert.bound);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn recover_defaults_match_the_published_constants() {
        let Command::Recover(a) = parse(&["tenrec", "recover", "--input", "t.tnsr"]).command else {
            panic!("wrong subcommand");
        };
        let s = a.schedule.schedule();
        assert_eq!(s, Schedule::default());
        assert_eq!(s.mu0, 1e-4);
        assert_eq!(s.mu_max, 1e10);
        assert_eq!(s.rho, 1.1);
        assert_eq!(s.eps, 1e-5);
        assert_eq!(s.maxiter, 1000);
        assert_eq!(a.solver, SolverArg::Pasd);
        assert!(!a.strict);

        let plan = plan_from_args(
            &RecoverArgs {
                target_ranks: Some(vec![10]),
                ..a
            },
            &[100, 100, 100],
        )
        .unwrap();
        assert_eq!(plan.ranks, Some(vec![12, 12, 12]));
        assert_eq!(plan.lambdas, default_lambdas(&[100, 100, 100]));
    }

    #[test]
    fn rpca_takes_its_own_growth_factor() {
        let Command::Recover(a) = parse(&["tenrec", "recover", "--input", "t", "--solver", "rpca"]).command
        else {
            panic!("wrong subcommand");
        };
        let plan = plan_from_args(&a, &[4, 4]).unwrap();
        assert_eq!(plan.schedule.rho, RPCA_DEFAULT_RHO);
        assert_eq!(plan.rpca_mu0, None);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["tenrec", "recover", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["tenrec"]), EXIT_USAGE);
        assert_eq!(run(["tenrec", "--help"]), EXIT_OK);
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::arg("x")), EXIT_USAGE);
        assert_eq!(exit_code(&Error::State("x".into())), EXIT_NUMERICAL);
        assert_eq!(
            exit_code(&Error::Numerical {
                iteration: 1,
                what: "x".into()
            }),
            EXIT_NUMERICAL
        );
        assert_eq!(
            exit_code(&Error::io("p", std::io::Error::other("x"))),
            EXIT_IO
        );
    }
}
