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


//! Suboptimality certificate of a converged PASD run, checked against the
//! objective of the feasible point built from the ground truth.
//!
//! `cargo run --release --example certificate -- [size] [rank] [seed]`

use tenrec::pasd::{feasible_point_objective, rank_bound, PasdConfig};
use tenrec::synth::{Instance, SynthSpec};
use tenrec::{pasd_recover, suboptimality_certificate};

fn main() -> tenrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let size: usize = args.first().map_or(20, |s| s.parse().expect("size"));
    let rank: usize = args.get(1).map_or(2, |s| s.parse().expect("rank"));
    let seed: u64 = args.get(2).map_or(3, |s| s.parse().expect("seed"));

    let inst = Instance::generate(&SynthSpec::cube(size, 3, rank, 0.05, seed))?;
    let config = PasdConfig::new(inst.truth.dims(), vec![rank_bound(rank); 3]);
    let out = pasd_recover(&inst.observed, &config)?;
    if !out.converged {
        println!("run stopped at maxiter without converging; no certificate");
        return Ok(());
    }
    let cert = suboptimality_certificate(&out, &inst.observed, &config)?;
    let sigma: f64 = config.lambdas.iter().sum();
    let f_truth = feasible_point_objective(&inst.observed, &inst.truth, &config.lambdas, &config.ranks)?;

    println!("iters {}", out.iters);
    println!("objective f(x*)      {:.6}", out.objective);
    println!("feasible f(truth)    {f_truth:.6}");
    println!("eps_hat {:.3e} (reference scale 1 + sum lambda = {:.2})", cert.epsilon_hat, 1.0 + sigma);
    println!("c {:.3e}", cert.c);
    println!("bound {:.3e}", cert.bound);
    println!(
        "f(x*) - f(truth) = {:.3e} <= bound: {}",
        out.objective - f_truth,
        out.objective - f_truth <= cert.bound
    );
    Ok(())
}
