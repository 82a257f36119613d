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


//! Empirical phase transition: success rate over (rank, corruption) cells.
//!
//! `cargo run --release --example phase_transition -- [size] [trials] [out.pgm]`
//!
//! Writes an 8-bit PGM (white = every trial recovered), its `.axes.csv`
//! companion, and prints the success counts.

use tenrec::io::{axes_path, write_phase_pgm};
use tenrec::synth::{phase_transition_sweep, Method, MethodSolver, PhaseGridSpec, DEFAULT_RSE_THRESHOLD};

fn main() -> tenrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let size: usize = args.first().map_or(30, |s| s.parse().expect("size"));
    let trials: usize = args.get(1).map_or(3, |s| s.parse().expect("trials"));
    let out = args.get(2).cloned().unwrap_or_else(|| "phase.pgm".into());

    let grid = PhaseGridSpec {
        dims: vec![size; 3],
        rank_axis: vec![2, 3, 4, 6],
        corruption_axis: vec![0.02, 0.05, 0.1, 0.2],
        trials,
        rse_threshold: DEFAULT_RSE_THRESHOLD,
        base_seed: 7,
    };
    let solver = MethodSolver::new(Method::Pasd);
    let result = phase_transition_sweep(&grid, &solver)?;

    print!("rho \\ r");
    for r in &result.rank_axis {
        print!("{r:>5}");
    }
    println!();
    for (rho, row) in result.corruption_axis.iter().zip(&result.success_counts) {
        print!("{:>7.2}", rho);
        for c in row {
            print!("{c:>5}");
        }
        println!();
    }
    write_phase_pgm(&result, &out)?;
    println!("wrote {out} and {}", axes_path(out.as_ref()).display());
    Ok(())
}
