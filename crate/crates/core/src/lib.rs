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

//! Tensor robust PCA.
//!
//! Splits an observed tensor `T` into a low-Tucker-rank part `X` and an
//! entrywise-sparse part `E`. The main solver ([`pasd`]) factors every mode
//! unfolding of the low-rank part as `U_n V_n` with columnwise-orthonormal
//! `U_n` and runs ADMM over the factors, so each iteration only needs SVDs
//! of `I_n x R_n` and `R_n x prod_{m != n} I_m` matrices.
//!
//! Also included:
//!
//! * [`baselines`]: the sum-of-nuclear-norms ADMM (full SVT per mode) and
//!   matrix RPCA on each unfolding, for comparison.
//! * [`synth`]: seeded Tucker generators, sparse corruption, RSE/PSNR and the
//!   benchmark / phase-transition / timing harness.
//! * [`io`]: the `TNSR` binary tensor format, metric CSVs, PGM phase plots and
//!   run manifests used by the `tenrec` binary.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod io;
pub mod linops;
pub mod pasd;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use linops::{procrustes, shrink, svt, thin_svd, ProcrustesOutcome, ThinSvd};
pub use pasd::{
    pasd_recover, suboptimality_certificate, Certificate, PasdConfig, PasdSolver, PasdState,
    RecoveryResult,
};
pub use tensor::{DenseTensor, Matrix, NormKind};
