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

//! Synthetic experiments: seeded Tucker ground truth, sparse corruption,
//! error metrics and the benchmark / phase-transition / timing harness.

use std::time::Instant;

use nalgebra::QR;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baselines::{rpca_unfold_recover, snn_recover, RpcaConfig, SnnConfig};
use crate::error::{Error, Result};
use crate::linops::thin_svd;
use crate::pasd::{pasd_recover, rank_bound, PasdConfig, RecoveryResult, Schedule};
use crate::rng::{stream, trial_seed, Purpose};
use crate::tensor::{DenseTensor, Matrix};

/// PSNR reported when the two tensors are identical.
pub const PSNR_CAP_DB: f64 = 99.0;
pub const DEFAULT_PEAK: f64 = 255.0;
pub const DEFAULT_RSE_THRESHOLD: f64 = 1e-3;

/// Numerical-rank certificate thresholds, relative to the top singular value.
pub const RANK_KEEP_TOL: f64 = 1e-8;
pub const RANK_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dims: Vec<usize>,
    /// Target Tucker ranks `r_n`.
    pub ranks: Vec<usize>,
    /// Fraction of entries to corrupt, in `[0, 1]`.
    pub corruption_fraction: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn cube(size: usize, order: usize, rank: usize, rho: f64, seed: u64) -> Self {
        Self {
            dims: vec![size; order],
            ranks: vec![rank; order],
            corruption_fraction: rho,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        DenseTensor::zeros(&self.dims)?;
        if self.ranks.len() != self.dims.len() {
            return Err(Error::arg(format!(
                "expected {} ranks, got {}",
                self.dims.len(),
                self.ranks.len()
            )));
        }
        for (n, (&r, &d)) in self.ranks.iter().zip(&self.dims).enumerate() {
            if r == 0 || r > d {
                return Err(Error::arg(format!(
                    "rank r_{n} = {r} must be in 1..={d}"
                )));
            }
            let others: usize = self
                .ranks
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != n)
                .map(|(_, &x)| x)
                .product();
            if r > others {
                return Err(Error::arg(format!(
                    "rank r_{n} = {r} exceeds the product {others} of the other ranks"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.corruption_fraction) {
            return Err(Error::arg(format!(
                "corruption fraction {} outside [0, 1]",
                self.corruption_fraction
            )));
        }
        Ok(())
    }
}

/// Haar-distributed `rows x cols` matrix with orthonormal columns.
fn haar_factor<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    let (mut q, r) = QR::new(g).unpack();
    // Fix the column signs by diag(R) so the distribution is exactly Haar.
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `C x_1 U_1 ... x_N U_N` with a standard-normal core and Haar factors.
/// Deterministic in `spec.seed`; the corruption settings are ignored.
pub fn gen_lowrank_tucker(spec: &SynthSpec) -> Result<DenseTensor> {
    spec.validate()?;
    let mut core_rng = stream(spec.seed, Purpose::Core);
    let mut t = DenseTensor::from_fn(&spec.ranks, |_| core_rng.sample(StandardNormal))?;
    for (n, (&d, &r)) in spec.dims.iter().zip(&spec.ranks).enumerate() {
        let mut rng = stream(spec.seed, Purpose::Factor(n as u32));
        let u = haar_factor(&mut rng, d, r);
        t = t.mode_product(&u, n)?;
    }
    if !has_tucker_rank(&t, &spec.ranks)? {
        return Err(Error::State(format!(
            "generated tensor (seed {}) failed the Tucker rank check",
            spec.seed
        )));
    }
    Ok(t)
}

/// True when every mode-n unfolding has `sigma_{r_n} >= 1e-8 sigma_1` and
/// `sigma_{r_n + 1} <= 1e-10 sigma_1`.
pub fn has_tucker_rank(t: &DenseTensor, ranks: &[usize]) -> Result<bool> {
    if ranks.len() != t.order() {
        return Err(Error::arg("rank vector length does not match tensor order"));
    }
    for (n, &r) in ranks.iter().enumerate() {
        let s = thin_svd(&t.unfold(n)?)?.s;
        let top = s.first().copied().unwrap_or(0.0);
        if r == 0 || r > s.len() || top == 0.0 {
            return Ok(false);
        }
        if s[r - 1] < RANK_KEEP_TOL * top {
            return Ok(false);
        }
        if let Some(&next) = s.get(r) {
            if next > RANK_DROP_TOL * top {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptionMode {
    /// Add i.i.d. `U[-1, 1]` noise to the chosen entries.
    Additive,
    /// Overwrite the chosen entries with i.i.d. `U[low, high]` values.
    Replace { low: f64, high: f64 },
}

/// Picks exactly `round(rho * len)` positions uniformly without replacement
/// and adds `U[-1, 1]` noise there. Returns the corrupted tensor and the
/// sorted positions (linear indices).
pub fn corrupt_sparse(t: &DenseTensor, rho: f64, seed: u64) -> Result<(DenseTensor, Vec<usize>)> {
    corrupt(t, rho, seed, CorruptionMode::Additive)
}

pub fn corrupt(
    t: &DenseTensor,
    rho: f64,
    seed: u64,
    mode: CorruptionMode,
) -> Result<(DenseTensor, Vec<usize>)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::arg(format!("corruption fraction {rho} outside [0, 1]")));
    }
    if let CorruptionMode::Replace { low, high } = mode {
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return Err(Error::arg(format!("bad replacement range [{low}, {high}]")));
        }
    }
    let len = t.len();
    let count = ((rho * len as f64).round() as usize).min(len);
    let mut pos_rng = stream(seed, Purpose::CorruptionPositions);
    let mut positions = index::sample(&mut pos_rng, len, count).into_vec();
    positions.sort_unstable();
    let mut val_rng = stream(seed, Purpose::CorruptionValues);
    let mut out = t.clone();
    let data = out.as_mut_slice();
    for &p in &positions {
        match mode {
            CorruptionMode::Additive => data[p] += val_rng.random_range(-1.0..=1.0),
            CorruptionMode::Replace { low, high } => {
                data[p] = val_rng.random_range(low..=high)
            }
        }
    }
    Ok((out, positions))
}

/// Relative error `||x - t0||_F / ||t0||_F`. Zero reference: 0 if `x` is also
/// zero, `+inf` otherwise.
pub fn rse(x: &DenseTensor, t0: &DenseTensor) -> Result<f64> {
    x.check_same_dims(t0)?;
    let diff: f64 = x
        .as_slice()
        .iter()
        .zip(t0.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let reference = t0.frobenius();
    if reference == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / reference)
}

/// `10 log10(peak^2 / MSE)`, capped at [`PSNR_CAP_DB`] when the MSE is zero.
pub fn psnr(x: &DenseTensor, t0: &DenseTensor, peak: f64) -> Result<f64> {
    x.check_same_dims(t0)?;
    let sq: f64 = x
        .as_slice()
        .iter()
        .zip(t0.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mse = sq / x.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Order-independent fingerprint of a tensor's exact bit pattern.
pub fn checksum(t: &DenseTensor) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for d in t.dims() {
        h = (h ^ *d as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    for x in t.as_slice() {
        h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Ground truth plus its corrupted observation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: SynthSpec,
    pub truth: DenseTensor,
    pub observed: DenseTensor,
    pub corrupted: Vec<usize>,
}

impl Instance {
    pub fn generate(spec: &SynthSpec) -> Result<Self> {
        let truth = gen_lowrank_tucker(spec)?;
        let (observed, corrupted) = corrupt_sparse(&truth, spec.corruption_fraction, spec.seed)?;
        Ok(Self {
            spec: spec.clone(),
            truth,
            observed,
            corrupted,
        })
    }
}

/// Anything the harness can benchmark.
pub trait Solver: Sync {
    fn name(&self) -> String;
    /// Recovers the low-rank part of `observed`; `target_ranks` are the
    /// ranks the instance was generated with.
    fn solve(&self, observed: &DenseTensor, target_ranks: &[usize]) -> Result<RecoveryResult>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pasd,
    Snn,
    Rpca,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Pasd => "pasd",
            Method::Snn => "snn",
            Method::Rpca => "rpca",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pasd" => Ok(Method::Pasd),
            "snn" => Ok(Method::Snn),
            "rpca" => Ok(Method::Rpca),
            other => Err(Error::arg(format!("unknown solver '{other}'"))),
        }
    }
}

/// Built-in solver with default lambdas. PASD uses `R_n = floor(1.2 r_n)`,
/// capped at `I_n`.
#[derive(Debug, Clone)]
pub struct MethodSolver {
    pub method: Method,
    pub schedule: Schedule,
}

impl MethodSolver {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            schedule: Schedule::default(),
        }
    }

    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        self.schedule.maxiter = maxiter;
        self
    }

    pub fn pasd_config(&self, dims: &[usize], target_ranks: &[usize]) -> PasdConfig {
        let ranks = target_ranks
            .iter()
            .zip(dims)
            .map(|(&r, &d)| rank_bound(r).clamp(1, d))
            .collect();
        let mut config = PasdConfig::new(dims, ranks);
        config.schedule = self.schedule.clone();
        config
    }
}

impl Solver for MethodSolver {
    fn name(&self) -> String {
        self.method.label().to_string()
    }

    fn solve(&self, observed: &DenseTensor, target_ranks: &[usize]) -> Result<RecoveryResult> {
        let dims = observed.dims();
        match self.method {
            Method::Pasd => pasd_recover(observed, &self.pasd_config(dims, target_ranks)),
            Method::Snn => {
                let mut config = SnnConfig::new(dims);
                config.schedule = self.schedule.clone();
                snn_recover(observed, &config)
            }
            Method::Rpca => {
                let config = RpcaConfig {
                    eps: self.schedule.eps,
                    maxiter: self.schedule.maxiter,
                    mu_max: self.schedule.mu_max,
                    ..RpcaConfig::default()
                };
                rpca_unfold_recover(observed, &config)
            }
        }
    }
}

/// One solver on one instance.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub rse: f64,
    pub seconds: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Solves `instance.observed`, timing only the solve call. Fails if the
/// solver leaves the ground truth altered.
pub fn run_trial(solver: &dyn Solver, instance: &Instance) -> Result<TrialOutcome> {
    let before = checksum(&instance.truth);
    let start = Instant::now();
    let result = solver.solve(&instance.observed, &instance.spec.ranks)?;
    let seconds = start.elapsed().as_secs_f64();
    if checksum(&instance.truth) != before {
        return Err(Error::State("ground truth changed during a trial".into()));
    }
    Ok(TrialOutcome {
        rse: rse(&result.x, &instance.truth)?,
        seconds,
        iters: result.iters,
        converged: result.converged,
    })
}

/// One row of a Table-1 style comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub solver: String,
    pub rho: f64,
    pub rank: String,
    pub trials: usize,
    /// Mean over trials that did not fail (`NaN` if all failed).
    pub mean_rse: f64,
    pub mean_time_s: f64,
    /// Fraction of all trials that converged.
    pub converged_frac: f64,
    pub failed: usize,
}

pub(crate) fn rank_label(ranks: &[usize]) -> String {
    if ranks.windows(2).all(|w| w[0] == w[1]) {
        ranks[0].to_string()
    } else {
        ranks
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// For every corruption level and solver, averages RSE and solve time over
/// `trials` seeded instances. Trial `k` uses the same instance for every
/// solver. Runs serially so the timings do not contend.
pub fn run_table_benchmark(
    dims: &[usize],
    ranks: &[usize],
    rhos: &[f64],
    solvers: &[&dyn Solver],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TableRow>> {
    if trials == 0 || rhos.is_empty() || solvers.is_empty() {
        return Err(Error::arg("benchmark needs trials, rho values and solvers"));
    }
    let mut rows = Vec::new();
    for &rho in rhos {
        let instances = (0..trials)
            .map(|k| {
                Instance::generate(&SynthSpec {
                    dims: dims.to_vec(),
                    ranks: ranks.to_vec(),
                    corruption_fraction: rho,
                    seed: trial_seed(base_seed, k as u64),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for solver in solvers {
            let mut rse_sum = 0.0;
            let mut time_sum = 0.0;
            let mut ok = 0usize;
            let mut converged = 0usize;
            for inst in &instances {
                match run_trial(*solver, inst) {
                    Ok(out) => {
                        ok += 1;
                        rse_sum += out.rse;
                        time_sum += out.seconds;
                        converged += out.converged as usize;
                    }
                    Err(Error::State(msg)) => return Err(Error::State(msg)),
                    Err(_) => {}
                }
            }
            let mean = |s: f64| if ok == 0 { f64::NAN } else { s / ok as f64 };
            rows.push(TableRow {
                solver: solver.name(),
                rho,
                rank: rank_label(ranks),
                trials,
                mean_rse: mean(rse_sum),
                mean_time_s: mean(time_sum),
                converged_frac: converged as f64 / trials as f64,
                failed: trials - ok,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridSpec {
    pub dims: Vec<usize>,
    /// Tucker rank `r` (used for every mode) along the x axis.
    pub rank_axis: Vec<usize>,
    /// Corruption fraction along the y axis.
    pub corruption_axis: Vec<f64>,
    pub trials: usize,
    pub rse_threshold: f64,
    pub base_seed: u64,
}

impl PhaseGridSpec {
    /// Rank 2..=50 step 2, corruption 2%..=50% step 2%, ten trials.
    pub fn full_grid(dims: Vec<usize>, base_seed: u64) -> Self {
        Self {
            dims,
            rank_axis: (1..=25).map(|k| 2 * k).collect(),
            corruption_axis: (1..=25).map(|k| 0.02 * k as f64).collect(),
            trials: 10,
            rse_threshold: DEFAULT_RSE_THRESHOLD,
            base_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub rank_axis: Vec<usize>,
    pub corruption_axis: Vec<f64>,
    pub trials: usize,
    /// `success_counts[i][j]`: successes at `corruption_axis[i]`, `rank_axis[j]`.
    pub success_counts: Vec<Vec<usize>>,
    pub rse_threshold: f64,
}

impl ExperimentGrid {
    pub fn count(&self, rank: usize, rho: f64) -> Option<usize> {
        let j = self.rank_axis.iter().position(|&r| r == rank)?;
        let i = self
            .corruption_axis
            .iter()
            .position(|&p| (p - rho).abs() < 1e-12)?;
        Some(self.success_counts[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("grid has zero trials"));
        }
        if self.success_counts.len() != self.corruption_axis.len()
            || self
                .success_counts
                .iter()
                .any(|row| row.len() != self.rank_axis.len())
        {
            return Err(Error::arg("grid counts do not match its axes"));
        }
        if self.success_counts.iter().flatten().any(|&c| c > self.trials) {
            return Err(Error::arg("grid count exceeds the trial count"));
        }
        Ok(())
    }
}

/// Success counts over a (rank, corruption) grid. A trial succeeds when
/// `RSE <= rse_threshold`; solver errors count as failures.
pub fn phase_transition_sweep(grid: &PhaseGridSpec, solver: &dyn Solver) -> Result<ExperimentGrid> {
    if grid.trials == 0 || grid.rank_axis.is_empty() || grid.corruption_axis.is_empty() {
        return Err(Error::arg("phase grid needs trials and nonempty axes"));
    }
    let order = grid.dims.len();
    let cells = grid.corruption_axis.len() * grid.rank_axis.len();
    let jobs: Vec<(usize, usize, usize)> = (0..grid.corruption_axis.len())
        .flat_map(|i| (0..grid.rank_axis.len()).map(move |j| (i, j)))
        .flat_map(|(i, j)| (0..grid.trials).map(move |k| (i, j, k)))
        .collect();
    // Validate every cell up front so bad axes are argument errors, not failures.
    for &r in &grid.rank_axis {
        SynthSpec {
            dims: grid.dims.clone(),
            ranks: vec![r; order],
            corruption_fraction: 0.0,
            seed: 0,
        }
        .validate()?;
    }
    let outcomes = jobs
        .par_iter()
        .map(|&(i, j, k)| -> Result<bool> {
            let cell = i * grid.rank_axis.len() + j;
            let spec = SynthSpec {
                dims: grid.dims.clone(),
                ranks: vec![grid.rank_axis[j]; order],
                corruption_fraction: grid.corruption_axis[i],
                seed: trial_seed(grid.base_seed, (cell * grid.trials + k) as u64),
            };
            let inst = Instance::generate(&spec)?;
            Ok(match run_trial(solver, &inst) {
                Ok(out) => out.rse <= grid.rse_threshold,
                Err(Error::State(msg)) => return Err(Error::State(msg)),
                Err(_) => false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![vec![0usize; grid.rank_axis.len()]; grid.corruption_axis.len()];
    for (&(i, j, _), ok) in jobs.iter().zip(outcomes) {
        counts[i][j] += ok as usize;
    }
    debug_assert_eq!(cells * grid.trials, jobs.len());
    Ok(ExperimentGrid {
        rank_axis: grid.rank_axis.clone(),
        corruption_axis: grid.corruption_axis.clone(),
        trials: grid.trials,
        success_counts: counts,
        rse_threshold: grid.rse_threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub size: usize,
    pub solver: String,
    pub total_s: f64,
    pub iters: usize,
    pub per_iter_s: f64,
    pub rse: f64,
    pub converged: bool,
}

/// One seeded cube instance per size (order `order`, rank `rank`, corruption
/// `rho`), solved by every solver on a single worker thread.
pub fn timing_sweep(
    sizes: &[usize],
    order: usize,
    solvers: &[&dyn Solver],
    rank: usize,
    rho: f64,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::State(format!("cannot build timing pool: {e}")))?;
    let mut rows = Vec::new();
    for &size in sizes {
        let inst = Instance::generate(&SynthSpec::cube(size, order, rank, rho, seed))?;
        for solver in solvers {
            let out = pool.install(|| run_trial(*solver, &inst))?;
            rows.push(TimingRow {
                size,
                solver: solver.name(),
                total_s: out.seconds,
                iters: out.iters,
                per_iter_s: out.seconds / out.iters.max(1) as f64,
                rse: out.rse,
                converged: out.converged,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
