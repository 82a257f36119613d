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

//! Comparison solvers.
//!
//! * [`snn_recover`]: ADMM on the sum-of-nuclear-norms model, splitting only
//!   the low-rank part into one copy `Z_n` per mode. Each iteration runs a
//!   full SVT on every unfolding.
//! * [`rpca_unfold_recover`]: matrix RPCA (inexact augmented Lagrange
//!   multipliers) on each unfolding separately, keeping the best mode.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linops::{shrink_scalar, svt_with_norm, thin_svd};
use crate::pasd::{
    check_lambdas, check_weights, combine, default_lambdas, dual_step, nan_guard, sparse_step,
    FinalDuals, RecoveryResult, Schedule,
};
use crate::tensor::{DenseTensor, Matrix, NormKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SnnConfig {
    pub lambdas: Vec<f64>,
    pub schedule: Schedule,
    /// `None` means weight the per-mode estimates by `lambdas`.
    pub output_weights: Option<Vec<f64>>,
}

impl SnnConfig {
    pub fn new(dims: &[usize]) -> Self {
        Self {
            lambdas: default_lambdas(dims),
            schedule: Schedule::default(),
            output_weights: None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        self.output_weights.as_deref().unwrap_or(&self.lambdas)
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        self.schedule.validate()?;
        check_lambdas(&self.lambdas, dims.len())?;
        check_weights(self.weights(), dims.len())
    }
}

/// Per-iteration view of the SNN iterate, for observers.
#[derive(Debug)]
pub struct SnnIterate<'a> {
    pub iter: usize,
    /// Penalty used during this iteration.
    pub mu: f64,
    pub z: &'a [DenseTensor],
    pub e: &'a DenseTensor,
    pub y: &'a [DenseTensor],
    pub residuals: &'a [f64],
}

pub fn snn_recover(t: &DenseTensor, config: &SnnConfig) -> Result<RecoveryResult> {
    snn_recover_observed(t, config, |_| {})
}

pub fn snn_recover_observed<F>(
    t: &DenseTensor,
    config: &SnnConfig,
    mut observer: F,
) -> Result<RecoveryResult>
where
    F: FnMut(&SnnIterate<'_>),
{
    let dims = t.dims().to_vec();
    config.validate(&dims)?;
    let order = dims.len();
    let sched = &config.schedule;
    let zero = DenseTensor::zeros(&dims)?;
    let mut e = zero.clone();
    let mut y = vec![zero; order];
    let mut z: Vec<DenseTensor> = Vec::new();
    let mut nuclear = vec![0.0; order];
    let mut mu = sched.mu0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let mut y_prev = y.clone();
    let mut e_prev = e.clone();
    let mut step_mu = mu;

    while iters < sched.maxiter {
        let k = iters + 1;
        let inv_mu = 1.0 / mu;
        let steps = (0..order)
            .into_par_iter()
            .map(|n| -> Result<(DenseTensor, f64)> {
                let g = t.zip_map(&e, |a, b| a - b)?.zip_map(&y[n], |a, b| a + b * inv_mu)?;
                let (low, norm) = svt_with_norm(&g.unfold(n)?, config.lambdas[n] / mu)?;
                Ok((DenseTensor::fold(&low, n, &dims)?, norm))
            })
            .collect::<Vec<_>>();
        z.clear();
        for (n, step) in steps.into_iter().enumerate() {
            let (zn, norm) = step.map_err(|err| match err {
                Error::Argument(what) => Error::Numerical { iteration: k, what },
                other => other,
            })?;
            nan_guard(k, "Z", &zn)?;
            nuclear[n] = norm;
            z.push(zn);
        }
        let e_new = sparse_step(t, &z, &y, mu);
        nan_guard(k, "E", &e_new)?;
        y_prev.clone_from(&y);
        e_prev = std::mem::replace(&mut e, e_new);
        let residuals = dual_step(t, &z, &e, &mut y, mu);
        step_mu = mu;
        mu = sched.next_mu(mu);
        iters = k;
        history.push(residuals.iter().fold(0.0f64, |a, &b| a.max(b)));
        observer(&SnnIterate {
            iter: k,
            mu: step_mu,
            z: &z,
            e: &e,
            y: &y,
            residuals: &residuals,
        });
        if residuals.iter().all(|&r| r < sched.eps) {
            converged = true;
            break;
        }
    }

    let y_hat = z
        .iter()
        .zip(&y_prev)
        .map(|(zn, yn)| {
            let mut out = yn.clone();
            for (((o, &tv), &zv), &ev) in out
                .as_mut_slice()
                .iter_mut()
                .zip(t.as_slice())
                .zip(zn.as_slice())
                .zip(e_prev.as_slice())
            {
                *o += step_mu * (tv - zv - ev);
            }
            out
        })
        .collect();
    let objective = config
        .lambdas
        .iter()
        .zip(&nuclear)
        .map(|(l, s)| l * s)
        .sum::<f64>()
        + e.norm(NormKind::L1);
    Ok(RecoveryResult {
        x: combine(&z, config.weights()),
        e,
        z,
        iters,
        converged,
        residual_history: history,
        objective,
        certificate: None,
        duals: Some(FinalDuals { y, y_hat }),
        factors: None,
    })
}

pub const RPCA_DEFAULT_RHO: f64 = 1.5;

/// Inexact-ALM matrix RPCA settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcaConfig {
    /// Sparse-part weight; `None` means `1/sqrt(max(rows, cols))` of each unfolding.
    pub lambda: Option<f64>,
    /// Starting penalty; `None` means `1.25 / ||M||_2`.
    pub mu0: Option<f64>,
    pub rho: f64,
    pub mu_max: f64,
    pub eps: f64,
    pub maxiter: usize,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        let s = Schedule::default();
        Self {
            lambda: None,
            mu0: None,
            rho: RPCA_DEFAULT_RHO,
            mu_max: s.mu_max,
            eps: s.eps,
            maxiter: s.maxiter,
        }
    }
}

impl RpcaConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::arg(format!("rpca lambda must be positive, got {l}")));
            }
        }
        Schedule {
            mu0: self.mu0.unwrap_or(1.0).min(self.mu_max),
            mu_max: self.mu_max,
            rho: self.rho,
            eps: self.eps,
            maxiter: self.maxiter,
        }
        .validate()
    }
}

#[derive(Debug, Clone)]
pub struct MatrixRpcaResult {
    pub low_rank: Matrix,
    pub sparse: Matrix,
    pub iters: usize,
    pub converged: bool,
    /// `||M - A - E||_inf` after each iteration.
    pub residual_history: Vec<f64>,
    /// `||A||_* + lambda ||E||_1`
    pub objective: f64,
}

/// Matrix RPCA by inexact ALM: SVT on the low-rank block, shrinkage on the
/// sparse block, multiplier ascent and geometric penalty growth.
pub fn rpca_matrix(m: &Matrix, config: &RpcaConfig) -> Result<MatrixRpcaResult> {
    config.validate()?;
    let (rows, cols) = m.shape();
    let lambda = config
        .lambda
        .unwrap_or_else(|| 1.0 / (rows.max(cols) as f64).sqrt());
    let spectral = thin_svd(m)?.s.first().copied().unwrap_or(0.0);
    let inf = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let mut a = Matrix::zeros(rows, cols);
    let mut e = Matrix::zeros(rows, cols);
    if spectral == 0.0 {
        return Ok(MatrixRpcaResult {
            low_rank: a,
            sparse: e,
            iters: 1,
            converged: true,
            residual_history: vec![0.0],
            objective: 0.0,
        });
    }
    let mut y = m / spectral.max(inf / lambda);
    let mut mu = config.mu0.unwrap_or(1.25 / spectral).min(config.mu_max);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let mut nuclear = 0.0;

    while iters < config.maxiter {
        let k = iters + 1;
        let inv_mu = 1.0 / mu;
        let (low, norm) = svt_with_norm(&(m - &e + &y * inv_mu), inv_mu).map_err(|err| {
            match err {
                Error::Argument(what) => Error::Numerical { iteration: k, what },
                other => other,
            }
        })?;
        a = low;
        nuclear = norm;
        let tau = lambda * inv_mu;
        e = Matrix::from_fn(rows, cols, |i, j| {
            shrink_scalar(m[(i, j)] - a[(i, j)] + y[(i, j)] * inv_mu, tau)
        });
        let r = m - &a - &e;
        let worst = r.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if !worst.is_finite() {
            return Err(Error::Numerical {
                iteration: k,
                what: "rpca residual is not finite".into(),
            });
        }
        y += &r * mu;
        mu = (config.rho * mu).min(config.mu_max);
        iters = k;
        history.push(worst);
        if worst < config.eps {
            converged = true;
            break;
        }
    }
    let l1: f64 = e.iter().map(|x| x.abs()).sum();
    Ok(MatrixRpcaResult {
        low_rank: a,
        sparse: e,
        iters,
        converged,
        residual_history: history,
        objective: nuclear + lambda * l1,
    })
}

/// Matrix RPCA on every mode-n unfolding; returns the mode with the smallest
/// final residual (lowest mode on ties). `z` holds every mode's low-rank fold.
pub fn rpca_unfold_recover(t: &DenseTensor, config: &RpcaConfig) -> Result<RecoveryResult> {
    config.validate()?;
    let dims = t.dims().to_vec();
    let runs = (0..dims.len())
        .into_par_iter()
        .map(|n| rpca_matrix(&t.unfold(n)?, config))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (n, run) in runs.iter().enumerate() {
        if final_residual(run) < final_residual(&runs[best]) {
            best = n;
        }
    }
    let z = runs
        .iter()
        .enumerate()
        .map(|(n, run)| DenseTensor::fold(&run.low_rank, n, &dims))
        .collect::<Result<Vec<_>>>()?;
    let chosen = &runs[best];
    Ok(RecoveryResult {
        x: z[best].clone(),
        e: DenseTensor::fold(&chosen.sparse, best, &dims)?,
        iters: chosen.iters,
        converged: chosen.converged,
        residual_history: chosen.residual_history.clone(),
        objective: chosen.objective,
        z,
        certificate: None,
        duals: None,
        factors: None,
    })
}

fn final_residual(run: &MatrixRpcaResult) -> f64 {
    run.residual_history.last().copied().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_input() {
        let t = DenseTensor::zeros(&[4, 3, 5]).unwrap();
        let res = snn_recover(&t, &SnnConfig::new(t.dims())).unwrap();
        assert!(res.converged);
        assert_eq!(res.iters, 1);
        assert_eq!(res.x, t);
        assert_eq!(res.e, t);

        let res = rpca_unfold_recover(&t, &RpcaConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.x, t);
        assert_eq!(res.e, t);
    }

    #[test]
    fn rpca_recovers_a_corrupted_low_rank_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = Matrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(2, 40, |_, _| rng.random_range(-1.0..1.0));
        let low = &a * &b;
        let mut m = low.clone();
        for k in 0..60 {
            let (i, j) = ((k * 7) % 30, (k * 13) % 40);
            m[(i, j)] += 5.0;
        }
        let res = rpca_matrix(&m, &RpcaConfig::default()).unwrap();
        assert!(res.converged);
        let err = (&res.low_rank - &low).norm() / low.norm();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn rpca_lifted_matrix_matches_direct_call() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = Matrix::from_fn(20, 20, |i, j| u[i] * v[j]);
        let t = DenseTensor::new(vec![20, 20, 1], m.as_slice().to_vec()).unwrap();
        let config = RpcaConfig::default();
        let direct = rpca_matrix(&m, &config).unwrap();
        let lifted = rpca_unfold_recover(&t, &config).unwrap();
        assert_eq!(lifted.z[0].as_slice(), direct.low_rank.as_slice());
    }

    #[test]
    fn rpca_rejects_bad_lambda() {
        let config = RpcaConfig {
            lambda: Some(-1.0),
            ..RpcaConfig::default()
        };
        assert!(rpca_matrix(&Matrix::identity(3, 3), &config).is_err());
    }
}
