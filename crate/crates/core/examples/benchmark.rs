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


//! Side-by-side comparison of PASD, SNN and per-unfolding RPCA, saved as a
//! metrics CSV.
//!
//! `cargo run --release --example benchmark -- [size] [rank] [trials] [out.csv]`

use tenrec::io::{read_metrics_csv, write_metrics_csv};
use tenrec::synth::{run_table_benchmark, Method, MethodSolver, Solver};

fn main() -> tenrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let size: usize = args.first().map_or(30, |s| s.parse().expect("size"));
    let rank: usize = args.get(1).map_or(3, |s| s.parse().expect("rank"));
    let trials: usize = args.get(2).map_or(2, |s| s.parse().expect("trials"));
    let out = args.get(3).cloned().unwrap_or_else(|| "metrics.csv".into());

    let solvers: Vec<MethodSolver> = [Method::Pasd, Method::Snn, Method::Rpca]
        .into_iter()
        .map(MethodSolver::new)
        .collect();
    let refs: Vec<&dyn Solver> = solvers.iter().map(|s| s as &dyn Solver).collect();
    let rows = run_table_benchmark(&[size; 3], &[rank; 3], &[0.05, 0.1], &refs, trials, 1)?;

    println!("{:<6}{:>6}{:>6}{:>12}{:>10}{:>6}", "solver", "rho", "rank", "rse", "time_s", "conv");
    for row in &rows {
        println!(
            "{:<6}{:>6.2}{:>6}{:>12.3e}{:>10.3}{:>6.2}",
            row.solver, row.rho, row.rank, row.mean_rse, row.mean_time_s, row.converged_frac
        );
    }
    write_metrics_csv(&rows, &out)?;
    assert_eq!(read_metrics_csv(&out)?.len(), rows.len());
    println!("wrote {out}");
    Ok(())
}
