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


//! Recover a corrupted low-Tucker-rank cube with PASD.
//!
//! `cargo run --release --example recover -- [size] [rank] [rho] [seed]`

use tenrec::pasd::{rank_bound, PasdConfig};
use tenrec::synth::{rse, Instance, SynthSpec};
use tenrec::pasd_recover;

fn main() -> tenrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let size: usize = get(0, "40").parse().expect("size");
    let rank: usize = get(1, "4").parse().expect("rank");
    let rho: f64 = get(2, "0.05").parse().expect("rho");
    let seed: u64 = get(3, "1").parse().expect("seed");

    let inst = Instance::generate(&SynthSpec::cube(size, 3, rank, rho, seed))?;
    let config = PasdConfig::new(inst.truth.dims(), vec![rank_bound(rank); 3]);
    let start = std::time::Instant::now();
    let out = pasd_recover(&inst.observed, &config)?;
    let secs = start.elapsed().as_secs_f64();

    println!("size {size}^3, rank {rank}, rho {rho}, R {:?}", config.ranks);
    println!(
        "iters {} converged {} time {secs:.2}s",
        out.iters, out.converged
    );
    println!("rse {:.3e}", rse(&out.x, &inst.truth)?);
    println!("final residual {:.3e}", out.final_residual());
    if let Some(cert) = &out.certificate {
        println!(
            "certificate: eps_hat {:.3e} c {:.3e} bound {:.3e}",
            cert.epsilon_hat, cert.c, cert.bound
        );
    }
    Ok(())
}
