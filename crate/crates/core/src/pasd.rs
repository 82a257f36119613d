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

//! Parallel active subspace decomposition (PASD).
//!
//! Solves
//!
//! ```text
//! min  sum_n lambda_n ||V_n||_* + ||E||_1
//! s.t. T = fold_n(U_n V_n) + E,  U_n in St(I_n, R_n),  n = 0..N
//! ```
//!
//! by ADMM on the partial augmented Lagrangian with one multiplier tensor
//! `Y_n` per mode. One iteration:
//!
//! 1. `G_n = T_(n) - E_(n) + Y_n,(n) / mu`
//! 2. `U_n <- P Q^T` where `G_n V_n^T = P S Q^T` (orthogonal procrustes)
//! 3. `V_n <- SVT_{lambda_n / mu}(U_n^T G_n)`
//! 4. `E <- shrink(mean_n(T - Z_n + Y_n / mu), 1 / (mu N))`, `Z_n = fold_n(U_n V_n)`
//! 5. `Y_n <- Y_n + mu (T - Z_n - E)`
//! 6. `mu <- min(rho mu, mu_max)`
//!
//! and stops once `||T - Z_n - E||_inf < eps` for every mode. Steps 1-3 only
//! read mode-local state plus `E` and `mu`, so the modes run in parallel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linops::{procrustes, shrink, svt_with_norm, thin_svd, ProcrustesOutcome};
use crate::tensor::{DenseTensor, Matrix, NormKind};

pub const DEFAULT_MU0: f64 = 1e-4;
pub const DEFAULT_MU_MAX: f64 = 1e10;
pub const DEFAULT_RHO: f64 = 1.1;
pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MAXITER: usize = 1000;

/// Penalty schedule and stopping rule shared by the ADMM solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    pub eps: f64,
    pub maxiter: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            mu0: DEFAULT_MU0,
            mu_max: DEFAULT_MU_MAX,
            rho: DEFAULT_RHO,
            eps: DEFAULT_EPS,
            maxiter: DEFAULT_MAXITER,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.mu0) || !pos(self.mu_max) {
            return Err(Error::arg("mu0 and mu_max must be positive and finite"));
        }
        if self.mu0 > self.mu_max {
            return Err(Error::arg(format!(
                "mu0 = {} exceeds mu_max = {}",
                self.mu0, self.mu_max
            )));
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return Err(Error::arg(format!("rho must be > 1, got {}", self.rho)));
        }
        if !pos(self.eps) {
            return Err(Error::arg(format!("eps must be positive, got {}", self.eps)));
        }
        if self.maxiter == 0 {
            return Err(Error::arg("maxiter must be at least 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn next_mu(&self, mu: f64) -> f64 {
        (self.rho * mu).min(self.mu_max)
    }
}

/// `sqrt(max(I_n, prod_{j != n} I_j)) / N` for every mode.
pub fn default_lambdas(dims: &[usize]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    let order = dims.len() as f64;
    dims.iter()
        .map(|&d| ((d.max(total / d)) as f64).sqrt() / order)
        .collect()
}

/// Rank upper bound `floor(1.2 r)` used when only a target rank is known.
pub fn rank_bound(target: usize) -> usize {
    target * 12 / 10
}

#[derive(Debug, Clone, PartialEq)]
pub struct PasdConfig {
    pub lambdas: Vec<f64>,
    /// Upper bounds `R_n` on the mode-n ranks.
    pub ranks: Vec<usize>,
    pub schedule: Schedule,
    /// Weights for combining the per-mode estimates into `X`. `None` means
    /// use `lambdas`.
    pub output_weights: Option<Vec<f64>>,
}

impl PasdConfig {
    /// Default lambdas and schedule with explicit rank bounds.
    pub fn new(dims: &[usize], ranks: Vec<usize>) -> Self {
        Self {
            lambdas: default_lambdas(dims),
            ranks,
            schedule: Schedule::default(),
            output_weights: None,
        }
    }

    /// Rank bounds `floor(1.2 r_n)` from target Tucker ranks.
    pub fn from_target_ranks(dims: &[usize], target: &[usize]) -> Self {
        Self::new(dims, target.iter().map(|&r| rank_bound(r)).collect())
    }

    pub fn weights(&self) -> &[f64] {
        self.output_weights.as_deref().unwrap_or(&self.lambdas)
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        let order = dims.len();
        self.schedule.validate()?;
        check_lambdas(&self.lambdas, order)?;
        if self.ranks.len() != order {
            return Err(Error::arg(format!(
                "expected {order} rank bounds, got {}",
                self.ranks.len()
            )));
        }
        for (n, (&r, &d)) in self.ranks.iter().zip(dims).enumerate() {
            if r == 0 || r > d {
                return Err(Error::arg(format!(
                    "rank bound R_{n} = {r} must be in 1..={d} (size of mode {n})"
                )));
            }
        }
        check_weights(self.weights(), order)
    }
}

pub(crate) fn check_lambdas(lambdas: &[f64], order: usize) -> Result<()> {
    if lambdas.len() != order {
        return Err(Error::arg(format!(
            "expected {order} lambdas, got {}",
            lambdas.len()
        )));
    }
    if let Some(n) = lambdas.iter().position(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::arg(format!("lambda_{n} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_weights(weights: &[f64], order: usize) -> Result<()> {
    if weights.len() != order {
        return Err(Error::arg(format!(
            "expected {order} output weights, got {}",
            weights.len()
        )));
    }
    if let Some(n) = weights.iter().position(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::arg(format!("output weight {n} must be positive")));
    }
    Ok(())
}

/// Iterate of the ADMM loop.
#[derive(Debug, Clone)]
pub struct PasdState {
    /// `I_n x R_n`, columnwise orthonormal once updated.
    pub u: Vec<Matrix>,
    /// `R_n x prod_{m != n} I_m`
    pub v: Vec<Matrix>,
    pub e: DenseTensor,
    pub y: Vec<DenseTensor>,
    pub mu: f64,
    /// Completed iterations.
    pub iter: usize,
}

impl PasdState {
    /// `U_n = eye(I_n, R_n)`, `V_n = 0`, `Y_n = 0`, `E = 0`, `mu = mu0`.
    pub fn initial(dims: &[usize], config: &PasdConfig) -> Result<Self> {
        config.validate(dims)?;
        let total: usize = dims.iter().product();
        let zero = DenseTensor::zeros(dims)?;
        Ok(Self {
            u: dims
                .iter()
                .zip(&config.ranks)
                .map(|(&d, &r)| Matrix::identity(d, r))
                .collect(),
            v: dims
                .iter()
                .zip(&config.ranks)
                .map(|(&d, &r)| Matrix::zeros(r, total / d))
                .collect(),
            e: zero.clone(),
            y: vec![zero; dims.len()],
            mu: config.schedule.mu0,
            iter: 0,
        })
    }

    /// `fold_n(U_n V_n)`
    pub fn z(&self, mode: usize) -> Result<DenseTensor> {
        DenseTensor::fold(&(&self.u[mode] * &self.v[mode]), mode, self.e.dims())
    }

    fn check_observed(&self, t: &DenseTensor) -> Result<()> {
        t.check_same_dims(&self.e)
    }
}

/// `G_n = T_(n) - E_(n) + Y_n,(n) / mu` at the current iterate.
pub fn g_matrix(state: &PasdState, t: &DenseTensor, mode: usize) -> Result<Matrix> {
    state.check_observed(t)?;
    let inv_mu = 1.0 / state.mu;
    let g = DenseTensor::from_raw(
        t.dims().to_vec(),
        t.as_slice()
            .iter()
            .zip(state.e.as_slice())
            .zip(state.y[mode].as_slice())
            .map(|((&t, &e), &y)| t - e + y * inv_mu)
            .collect(),
    );
    g.unfold(mode)
}

fn u_step(g: &Matrix, v: &Matrix, u_prev: &Matrix) -> Result<Matrix> {
    Ok(match procrustes(g, v)? {
        ProcrustesOutcome::Rotation(u) => u,
        // Every orthonormal U is optimal; keep the previous one.
        ProcrustesOutcome::Degenerate => u_prev.clone(),
    })
}

fn v_step(u: &Matrix, g: &Matrix, tau: f64) -> Result<(Matrix, f64)> {
    svt_with_norm(&(u.transpose() * g), tau)
}

/// New `U_n`: the procrustes solution for `G_n` against the current `V_n`,
/// or the current `U_n` when `G_n V_n^T` vanishes.
pub fn update_u(state: &PasdState, t: &DenseTensor, mode: usize) -> Result<Matrix> {
    let g = g_matrix(state, t, mode)?;
    u_step(&g, &state.v[mode], &state.u[mode])
}

/// New `V_n = SVT_{lambda_n / mu}(U_n^T G_n)`. Expects `state.u[mode]` to
/// already hold the updated `U_n`.
pub fn update_v(
    state: &PasdState,
    t: &DenseTensor,
    mode: usize,
    config: &PasdConfig,
) -> Result<Matrix> {
    let g = g_matrix(state, t, mode)?;
    Ok(v_step(&state.u[mode], &g, config.lambdas[mode] / state.mu)?.0)
}

/// New `E = shrink(mean_n H_n, 1/(mu N))` with
/// `H_n = T - fold_n(U_n V_n) + Y_n / mu` built from the state's factors.
pub fn update_e(state: &PasdState, t: &DenseTensor) -> Result<DenseTensor> {
    state.check_observed(t)?;
    let z = (0..t.order())
        .map(|n| state.z(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(sparse_step(t, &z, &state.y, state.mu))
}

/// Closed-form minimizer of `||E||_1 + (mu/2) sum_n ||E - H_n||_F^2`.
pub(crate) fn sparse_step(
    t: &DenseTensor,
    z: &[DenseTensor],
    y: &[DenseTensor],
    mu: f64,
) -> DenseTensor {
    let order = z.len() as f64;
    let inv_mu = 1.0 / mu;
    let mut acc = vec![0.0; t.len()];
    for (zn, yn) in z.iter().zip(y) {
        for ((a, &zv), &yv) in acc.iter_mut().zip(zn.as_slice()).zip(yn.as_slice()) {
            *a += yv * inv_mu - zv;
        }
    }
    let mean = DenseTensor::from_raw(
        t.dims().to_vec(),
        t.as_slice()
            .iter()
            .zip(&acc)
            .map(|(&tv, &a)| tv + a / order)
            .collect(),
    );
    shrink(&mean, 1.0 / (mu * order))
}

/// `Y_n += mu (T - Z_n - E)` for every mode; returns `||T - Z_n - E||_inf` per mode.
pub(crate) fn dual_step(
    t: &DenseTensor,
    z: &[DenseTensor],
    e: &DenseTensor,
    y: &mut [DenseTensor],
    mu: f64,
) -> Vec<f64> {
    y.par_iter_mut()
        .zip(z.par_iter())
        .map(|(yn, zn)| {
            let mut worst: f64 = 0.0;
            for (((yv, &tv), &zv), &ev) in yn
                .as_mut_slice()
                .iter_mut()
                .zip(t.as_slice())
                .zip(zn.as_slice())
                .zip(e.as_slice())
            {
                let r = tv - zv - ev;
                worst = worst.max(r.abs());
                *yv += mu * r;
            }
            worst
        })
        .collect()
}

/// `(sum_n alpha_n Z_n) / sum_n alpha_n`
pub(crate) fn combine(z: &[DenseTensor], weights: &[f64]) -> DenseTensor {
    let total: f64 = weights.iter().sum();
    let mut acc = vec![0.0; z[0].len()];
    for (zn, &w) in z.iter().zip(weights) {
        for (a, &v) in acc.iter_mut().zip(zn.as_slice()) {
            *a += w * v;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    DenseTensor::from_raw(z[0].dims().to_vec(), acc)
}

pub(crate) fn nan_guard(iteration: usize, what: &str, t: &DenseTensor) -> Result<()> {
    if t.all_finite() {
        Ok(())
    } else {
        Err(Error::Numerical {
            iteration,
            what: format!("{what} has non-finite entries"),
        })
    }
}

/// Per-iteration numbers handed to observers.
#[derive(Debug, Clone)]
pub struct IterationStats {
    /// 1-based iteration number.
    pub iter: usize,
    /// Penalty used during this iteration (before the schedule update).
    pub mu: f64,
    /// `||T - Z_n - E||_inf` per mode after this iteration.
    pub residuals: Vec<f64>,
    /// `sum_n lambda_n ||V_n||_* + ||E||_1` at the new iterate.
    pub objective: f64,
}

/// Quantities entering the suboptimality bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `||sum_n (Y*_n - Yhat*_n)||_inf`
    pub epsilon_hat: f64,
    pub c: f64,
    /// `c * epsilon_hat + sum_n lambda_n I_n prod_{m != n} I_m * eps`: the
    /// returned objective exceeds the global optimum by at most this much.
    pub bound: f64,
}

/// Final multipliers kept for the certificate.
#[derive(Debug, Clone)]
pub struct FinalDuals {
    pub y: Vec<DenseTensor>,
    /// `Yhat_n = Y_n^k + mu^k (T - Z_n^{k+1} - E^k)` at the last iteration.
    pub y_hat: Vec<DenseTensor>,
}

impl FinalDuals {
    /// `sum_n (Y_n - Yhat_n)`
    pub fn gap(&self) -> DenseTensor {
        let mut acc = vec![0.0; self.y[0].len()];
        for (y, yh) in self.y.iter().zip(&self.y_hat) {
            for ((a, &p), &q) in acc.iter_mut().zip(y.as_slice()).zip(yh.as_slice()) {
                *a += p - q;
            }
        }
        DenseTensor::from_raw(self.y[0].dims().to_vec(), acc)
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Combined low-rank estimate.
    pub x: DenseTensor,
    /// Sparse estimate.
    pub e: DenseTensor,
    /// Per-mode low-rank estimates `Z_n`.
    pub z: Vec<DenseTensor>,
    pub iters: usize,
    pub converged: bool,
    /// `max_n ||T - Z_n - E||_inf` after each iteration.
    pub residual_history: Vec<f64>,
    /// Solver objective at the final iterate.
    pub objective: f64,
    /// Set for converged PASD runs.
    pub certificate: Option<Certificate>,
    /// Set for PASD runs.
    pub duals: Option<FinalDuals>,
    /// `(U_n, V_n)` for PASD runs.
    pub factors: Option<Vec<(Matrix, Matrix)>>,
}

impl RecoveryResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// ADMM driver. Holds the config; each `solve` owns its state.
#[derive(Debug, Clone)]
pub struct PasdSolver {
    config: PasdConfig,
}

impl PasdSolver {
    pub fn new(config: PasdConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &PasdConfig {
        &self.config
    }

    pub fn solve(&self, t: &DenseTensor) -> Result<RecoveryResult> {
        self.solve_observed(t, |_, _| {})
    }

    /// Like [`PasdSolver::solve`], calling `observer` after every iteration
    /// with the updated state (multipliers and `mu` already advanced).
    pub fn solve_observed<F>(&self, t: &DenseTensor, mut observer: F) -> Result<RecoveryResult>
    where
        F: FnMut(&PasdState, &IterationStats),
    {
        let config = &self.config;
        let dims = t.dims().to_vec();
        let order = dims.len();
        let mut state = PasdState::initial(&dims, config)?;
        let sched = &config.schedule;

        let mut history = Vec::new();
        let mut converged = false;
        let mut z: Vec<DenseTensor> = Vec::new();
        let mut nuclear = vec![0.0; order];
        let mut y_prev: Vec<DenseTensor> = Vec::new();
        let mut e_prev = state.e.clone();
        let mut step_mu = state.mu;

        while state.iter < sched.maxiter {
            let k = state.iter + 1;
            let mu = state.mu;

            let updates = (0..order)
                .into_par_iter()
                .map(|n| -> Result<(Matrix, Matrix, f64, DenseTensor)> {
                    let g = g_matrix(&state, t, n)?;
                    let u = u_step(&g, &state.v[n], &state.u[n])?;
                    let (v, norm) = v_step(&u, &g, config.lambdas[n] / mu)?;
                    let zn = DenseTensor::fold(&(&u * &v), n, &dims)?;
                    Ok((u, v, norm, zn))
                })
                .collect::<Vec<_>>();
            z.clear();
            for (n, up) in updates.into_iter().enumerate() {
                let (u, v, norm, zn) = up.map_err(|err| match err {
                    Error::Argument(what) => Error::Numerical { iteration: k, what },
                    other => other,
                })?;
                nan_guard(k, "Z", &zn)?;
                state.u[n] = u;
                state.v[n] = v;
                nuclear[n] = norm;
                z.push(zn);
            }

            let e_new = sparse_step(t, &z, &state.y, mu);
            nan_guard(k, "E", &e_new)?;
            y_prev.clone_from(&state.y);
            e_prev = std::mem::replace(&mut state.e, e_new);
            let residuals = dual_step(t, &z, &state.e, &mut state.y, mu);
            if residuals.iter().any(|r| !r.is_finite()) {
                return Err(Error::Numerical {
                    iteration: k,
                    what: "residual is not finite".into(),
                });
            }
            step_mu = mu;
            state.mu = sched.next_mu(mu);
            state.iter = k;

            let worst = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
            history.push(worst);
            let objective = objective_value(&config.lambdas, &nuclear, &state.e);
            observer(
                &state,
                &IterationStats {
                    iter: k,
                    mu,
                    residuals: residuals.clone(),
                    objective,
                },
            );
            if residuals.iter().all(|&r| r < sched.eps) {
                converged = true;
                break;
            }
        }

        let y_hat = final_y_hat(t, &z, &y_prev, &e_prev, step_mu);
        let duals = FinalDuals {
            y: state.y.clone(),
            y_hat,
        };
        let objective = objective_value(&config.lambdas, &nuclear, &state.e);
        let mut result = RecoveryResult {
            x: combine(&z, config.weights()),
            e: state.e.clone(),
            z,
            iters: state.iter,
            converged,
            residual_history: history,
            objective,
            certificate: None,
            duals: Some(duals),
            factors: Some(state.u.into_iter().zip(state.v).collect()),
        };
        if converged {
            result.certificate = Some(suboptimality_certificate(&result, t, config)?);
        }
        Ok(result)
    }
}

fn objective_value(lambdas: &[f64], nuclear: &[f64], e: &DenseTensor) -> f64 {
    lambdas.iter().zip(nuclear).map(|(l, s)| l * s).sum::<f64>() + e.norm(NormKind::L1)
}

fn final_y_hat(
    t: &DenseTensor,
    z: &[DenseTensor],
    y_prev: &[DenseTensor],
    e_prev: &DenseTensor,
    mu: f64,
) -> Vec<DenseTensor> {
    z.iter()
        .zip(y_prev)
        .map(|(zn, yn)| {
            DenseTensor::from_raw(
                t.dims().to_vec(),
                t.as_slice()
                    .iter()
                    .zip(zn.as_slice())
                    .zip(e_prev.as_slice())
                    .zip(yn.as_slice())
                    .map(|(((&tv, &zv), &ev), &yv)| yv + mu * (tv - zv - ev))
                    .collect(),
            )
        })
        .collect()
}

/// Runs PASD with `config` on the observed tensor `t`.
pub fn pasd_recover(t: &DenseTensor, config: &PasdConfig) -> Result<RecoveryResult> {
    PasdSolver::new(config.clone()).solve(t)
}

/// Suboptimality quantities from the final multipliers of a converged run.
pub fn suboptimality_certificate(
    result: &RecoveryResult,
    t: &DenseTensor,
    config: &PasdConfig,
) -> Result<Certificate> {
    if !result.converged {
        return Err(Error::State(
            "certificate requested for a run that did not converge".into(),
        ));
    }
    let duals = result
        .duals
        .as_ref()
        .ok_or_else(|| Error::State("result carries no final multipliers".into()))?;
    let gap = duals.gap();
    gap.check_same_dims(t)?;
    Ok(certificate_from_gap(
        &gap,
        t,
        &config.lambdas,
        &config.schedule,
        result.iters,
    ))
}

/// Certificate from `sum_n (Y*_n - Yhat*_n)`, the observed tensor, the
/// lambdas, the schedule and the stopping iteration `k*`.
pub fn certificate_from_gap(
    gap: &DenseTensor,
    t: &DenseTensor,
    lambdas: &[f64],
    schedule: &Schedule,
    k_star: usize,
) -> Certificate {
    let epsilon_hat = gap.norm(NormKind::LInf);
    let c = certificate_constant(t, schedule, k_star);
    let total = t.len() as f64;
    let feasibility: f64 = lambdas.iter().map(|l| l * total * schedule.eps).sum();
    Certificate {
        epsilon_hat,
        c,
        bound: c * epsilon_hat + feasibility,
    }
}

/// `(1/(mu0 N^2)) sum_n I_n prod_{m != n} I_m (rho(1+rho)/(rho-1) + 1/(2 rho^k*)) + ||T||_1`
pub fn certificate_constant(t: &DenseTensor, schedule: &Schedule, k_star: usize) -> f64 {
    let order = t.order() as f64;
    let total = t.len() as f64;
    let rho = schedule.rho;
    let growth = rho * (1.0 + rho) / (rho - 1.0) + 0.5 * rho.powf(-(k_star as f64));
    order * total * growth / (schedule.mu0 * order * order) + t.norm(NormKind::L1)
}

/// Objective of the feasible point built from a known low-rank part `x0`:
/// `U_n, V_n` from the skinny SVD of `x0_(n)` (padded to `R_n` columns) and
/// `E = T - x0`. Every mode rank of `x0` must fit in the rank bounds.
pub fn feasible_point_objective(
    t: &DenseTensor,
    x0: &DenseTensor,
    lambdas: &[f64],
    ranks: &[usize],
) -> Result<f64> {
    t.check_same_dims(x0)?;
    check_lambdas(lambdas, t.order())?;
    let mut total = 0.0;
    for (n, (&lambda, &bound)) in lambdas.iter().zip(ranks).enumerate() {
        let s = thin_svd(&x0.unfold(n)?)?.s;
        let tol = 1e-10 * s.first().copied().unwrap_or(0.0);
        let rank = s.iter().filter(|&&x| x > tol).count();
        if rank > bound {
            return Err(Error::arg(format!(
                "mode-{n} rank {rank} of the reference exceeds the bound {bound}"
            )));
        }
        total += lambda * s.iter().sum::<f64>();
    }
    Ok(total + t.sub(x0)?.norm(NormKind::L1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{nuclear_norm, orthonormality_error};
    use crate::tensor::matrix_frobenius;
    use nalgebra::QR;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
        DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, dims: &[usize], config: &PasdConfig) -> PasdState {
        let mut s = PasdState::initial(dims, config).unwrap();
        let total: usize = dims.iter().product();
        for n in 0..dims.len() {
            let r = config.ranks[n];
            s.u[n] = QR::new(Matrix::from_fn(dims[n], r, |_, _| rng.random_range(-1.0..1.0))).q();
            s.v[n] = Matrix::from_fn(r, total / dims[n], |_, _| rng.random_range(-1.0..1.0));
            s.y[n] = random_tensor(rng, dims).scale(0.1);
        }
        s.e = random_tensor(rng, dims).scale(0.3);
        s.mu = 2.5;
        s
    }

    #[test]
    fn defaults_follow_the_published_constants() {
        let s = Schedule::default();
        assert_eq!((s.mu0, s.mu_max, s.rho, s.eps, s.maxiter), (1e-4, 1e10, 1.1, 1e-5, 1000));
        let l = default_lambdas(&[100, 100, 100]);
        assert!(l.iter().all(|&x| (x - 100.0 / 3.0).abs() < 1e-12));
        let l = default_lambdas(&[4, 50]);
        assert!((l[0] - 50f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((l[1] - 50f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(rank_bound(10), 12);
        assert_eq!(rank_bound(4), 4);
        assert_eq!(rank_bound(5), 6);
    }

    #[test]
    fn config_validation() {
        let dims = [5, 6, 7];
        assert!(PasdConfig::new(&dims, vec![2, 2, 2]).validate(&dims).is_ok());
        let err = PasdConfig::new(&dims, vec![2, 7, 2]).validate(&dims).unwrap_err();
        assert!(err.to_string().contains("R_1"), "{err}");
        assert!(PasdConfig::new(&dims, vec![2, 2]).validate(&dims).is_err());
        let mut c = PasdConfig::new(&dims, vec![1, 1, 1]);
        c.schedule.rho = 1.0;
        assert!(c.validate(&dims).is_err());
        let mut c = PasdConfig::new(&dims, vec![1, 1, 1]);
        c.schedule.mu0 = 1e11;
        assert!(c.validate(&dims).is_err());
        let mut c = PasdConfig::new(&dims, vec![1, 1, 1]);
        c.output_weights = Some(vec![1.0, 0.0, 1.0]);
        assert!(c.validate(&dims).is_err());
    }

    #[test]
    fn first_u_update_keeps_the_initializer() {
        let dims = [6, 5, 4];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(&mut rng, &dims);
        let config = PasdConfig::new(&dims, vec![2, 3, 2]);
        let state = PasdState::initial(&dims, &config).unwrap();
        for (n, &d) in dims.iter().enumerate() {
            let u = update_u(&state, &t, n).unwrap();
            assert_eq!(u, Matrix::identity(d, config.ranks[n]));
        }
    }

    #[test]
    fn u_update_recovers_orthonormal_g() {
        // G = Q [I | 0], V = [I | 0] => U = Q.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = QR::new(Matrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0))).q();
        let v = Matrix::from_fn(2, 7, |i, j| if i == j { 1.0 } else { 0.0 });
        let g = &q * &v;
        let u = u_step(&g, &v, &Matrix::identity(5, 2)).unwrap();
        assert!((u - q).abs().max() < 1e-12);
    }

    #[test]
    fn u_update_beats_random_candidates() {
        let dims = [8, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_tensor(&mut rng, &dims);
        let config = PasdConfig::new(&dims, vec![2, 2, 2]);
        let state = random_state(&mut rng, &dims, &config);
        let u = update_u(&state, &t, 0).unwrap();
        let g = g_matrix(&state, &t, 0).unwrap();
        let best = matrix_frobenius(&(&u * &state.v[0] - &g));
        assert!(orthonormality_error(&u) < 1e-10);
        for _ in 0..1000 {
            let cand = QR::new(Matrix::from_fn(8, 2, |_, _| rng.random_range(-1.0..1.0))).q();
            assert!(matrix_frobenius(&(cand * &state.v[0] - &g)) >= best - 1e-12);
        }
    }

    #[test]
    fn v_update_zero_threshold_and_zero_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = QR::new(Matrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0))).q();
        let g = Matrix::from_fn(6, 9, |_, _| rng.random_range(-1.0..1.0));
        let (v, _) = v_step(&u, &g, 0.0).unwrap();
        assert!((v - u.transpose() * &g).abs().max() < 1e-12);
        let (v, n) = v_step(&u, &Matrix::zeros(6, 9), 0.5).unwrap();
        assert_eq!(v, Matrix::zeros(3, 9));
        assert_eq!(n, 0.0);
    }

    #[test]
    fn v_update_is_a_local_minimum() {
        let dims = [6, 4, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = random_tensor(&mut rng, &dims);
        let config = PasdConfig::new(&dims, vec![3, 2, 2]);
        let state = random_state(&mut rng, &dims, &config);
        let lambda = 0.7;
        let mut cfg = config.clone();
        cfg.lambdas[0] = lambda;
        let v = update_v(&state, &t, 0, &cfg).unwrap();
        let g = g_matrix(&state, &t, 0).unwrap();
        let u = &state.u[0];
        let f = |v: &Matrix| {
            lambda * nuclear_norm(v).unwrap()
                + 0.5 * state.mu * matrix_frobenius(&(u * v - &g)).powi(2)
        };
        let base = f(&v);
        for i in 0..v.nrows() {
            for j in 0..v.ncols() {
                for step in [1e-4, -1e-4] {
                    let mut p = v.clone();
                    p[(i, j)] += step;
                    assert!(f(&p) >= base - 1e-12, "({i},{j}) {step}");
                }
            }
        }
    }

    #[test]
    fn e_update_cases() {
        let dims = [3, 4, 2];
        let config = PasdConfig::new(&dims, vec![1, 1, 1]);
        let t = DenseTensor::zeros(&dims).unwrap();
        let state = PasdState::initial(&dims, &config).unwrap();
        assert_eq!(update_e(&state, &t).unwrap(), t);

        // Order 1: plain shrink of H with threshold 1/mu.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t1 = random_tensor(&mut rng, &[7]);
        let cfg1 = PasdConfig::new(&[7], vec![1]);
        let mut s1 = PasdState::initial(&[7], &cfg1).unwrap();
        s1.mu = 1.7;
        s1.y[0] = random_tensor(&mut rng, &[7]);
        s1.v[0] = Matrix::from_fn(1, 1, |_, _| 0.3);
        let h = t1.sub(&s1.z(0).unwrap()).unwrap().add(&s1.y[0].scale(1.0 / 1.7)).unwrap();
        let want = shrink(&h, 1.0 / 1.7);
        let got = update_e(&s1, &t1).unwrap();
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn e_update_minimizes_separable_objective() {
        let dims = [4, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = random_tensor(&mut rng, &dims);
        let config = PasdConfig::new(&dims, vec![2, 2, 2]);
        let state = random_state(&mut rng, &dims, &config);
        let e = update_e(&state, &t).unwrap();
        let h: Vec<DenseTensor> = (0..3)
            .map(|n| {
                t.sub(&state.z(n).unwrap())
                    .unwrap()
                    .add(&state.y[n].scale(1.0 / state.mu))
                    .unwrap()
            })
            .collect();
        for i in 0..t.len() {
            let f = |x: f64| {
                x.abs() + 0.5 * state.mu * h.iter().map(|hn| (x - hn.as_slice()[i]).powi(2)).sum::<f64>()
            };
            let base = f(e.as_slice()[i]);
            // 1-D grid search over a window around the candidate.
            let lo = e.as_slice()[i] - 2.0;
            let best_grid = (0..=40000)
                .map(|k| f(lo + 4.0 * k as f64 / 40000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(base <= best_grid + 1e-9, "entry {i}");
        }
    }

    #[test]
    fn update_order_does_not_matter() {
        let dims = [5, 4, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let t = random_tensor(&mut rng, &dims);
        let config = PasdConfig::new(&dims, vec![2, 2, 2]);
        let state = random_state(&mut rng, &dims, &config);
        let run = |order: &[usize]| {
            let mut s = state.clone();
            for &n in order {
                s.u[n] = update_u(&state, &t, n).unwrap();
            }
            let snapshot = s.clone();
            for &n in order {
                s.v[n] = update_v(&snapshot, &t, n, &config).unwrap();
            }
            s
        };
        let fwd = run(&[0, 1, 2]);
        let rev = run(&[2, 1, 0]);
        assert_eq!(fwd.u, rev.u);
        assert_eq!(fwd.v, rev.v);
    }

    #[test]
    fn zero_input_converges_immediately() {
        let dims = [4, 5, 3];
        let t = DenseTensor::zeros(&dims).unwrap();
        let res = pasd_recover(&t, &PasdConfig::new(&dims, vec![2, 2, 2])).unwrap();
        assert!(res.converged);
        assert_eq!(res.iters, 1);
        assert_eq!(res.x, t);
        assert_eq!(res.e, t);
        assert_eq!(res.certificate.unwrap().epsilon_hat, 0.0);
    }

    #[test]
    fn non_converged_result_has_no_certificate() {
        let dims = [6, 6, 6];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor(&mut rng, &dims);
        let mut config = PasdConfig::new(&dims, vec![2, 2, 2]);
        config.schedule.maxiter = 3;
        let res = pasd_recover(&t, &config).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iters, 3);
        assert_eq!(res.residual_history.len(), 3);
        assert!(res.certificate.is_none());
        assert!(matches!(
            suboptimality_certificate(&res, &t, &config),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn certificate_constant_formula() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, -2.0, 0.5, 0.0]).unwrap();
        let s = Schedule::default();
        let c = certificate_constant(&t, &s, 3);
        // N = 2, I_n prod_{m != n} I_m = 4 for both modes.
        let growth = 1.1 * 2.1 / 0.1 + 0.5 / 1.1f64.powi(3);
        let want = (4.0 + 4.0) * growth / (1e-4 * 4.0) + 3.5;
        assert!((c - want).abs() <= 1e-12 * want);
    }
}
