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


//! Per-iteration cost of PASD against the full-SVT baseline as the cube
//! side grows, with the fitted log-log slopes.
//!
//! `cargo run --release --example timing -- [sizes] [rank]`, e.g. `40,60,80 10`.

use tenrec::synth::{loglog_slope, timing_sweep, Method, MethodSolver, Solver};

fn main() -> tenrec::Result<()> {
    let mut args = std::env::args().skip(1);
    let sizes: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "40,60,80".into())
        .split(',')
        .map(|s| s.parse().expect("size"))
        .collect();
    let rank: usize = args.next().map_or(10, |s| s.parse().expect("rank"));

    let pasd = MethodSolver::new(Method::Pasd);
    let snn = MethodSolver::new(Method::Snn);
    let solvers: [&dyn Solver; 2] = [&pasd, &snn];
    let rows = timing_sweep(&sizes, 3, &solvers, rank, 0.05, 7)?;

    println!("{:>5} {:>6} {:>10} {:>6} {:>12} {:>10}", "size", "solver", "total_s", "iters", "per_iter_s", "rse");
    for r in &rows {
        println!(
            "{:>5} {:>6} {:>10.3} {:>6} {:>12.4e} {:>10.2e}",
            r.size, r.solver, r.total_s, r.iters, r.per_iter_s, r.rse
        );
    }
    let x: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    for name in ["pasd", "snn"] {
        let y: Vec<f64> = rows
            .iter()
            .filter(|r| r.solver == name)
            .map(|r| r.per_iter_s)
            .collect();
        println!("{name} per-iteration slope {:.2}", loglog_slope(&x, &y));
    }
    Ok(())
}
