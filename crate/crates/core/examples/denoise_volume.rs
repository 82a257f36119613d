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


//! Image-like volume with salt-and-pepper style corruption: a fraction of
//! voxels is overwritten with uniform values in `[0, 255]`. Reports PSNR of
//! the corrupted input and of each solver's output.
//!
//! `cargo run --release --example denoise_volume -- [size] [rank] [rho]`

use tenrec::baselines::{rpca_unfold_recover, snn_recover, RpcaConfig, SnnConfig};
use tenrec::pasd::{rank_bound, PasdConfig};
use tenrec::pasd_recover;
use tenrec::synth::{corrupt, gen_lowrank_tucker, psnr, CorruptionMode, SynthSpec, DEFAULT_PEAK};
use tenrec::tensor::NormKind;

fn main() -> tenrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let size: usize = args.first().map_or(32, |s| s.parse().expect("size"));
    let rank: usize = args.get(1).map_or(3, |s| s.parse().expect("rank"));
    let rho: f64 = args.get(2).map_or(0.1, |s| s.parse().expect("rho"));

    let spec = SynthSpec::cube(size, 3, rank, 0.0, 21);
    let base = gen_lowrank_tucker(&spec)?;
    let lo = base.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let span = base.norm(NormKind::LInf) * 2.0;
    let clean = base.map(|v| (v - lo) / span * DEFAULT_PEAK);
    let (noisy, _) = corrupt(&clean, rho, 22, CorruptionMode::Replace { low: 0.0, high: DEFAULT_PEAK })?;

    println!("volume {size}^3 rank {rank}, {:.0}% voxels replaced", rho * 100.0);
    println!("{:<10}{:>10}", "input", format!("{:.2}", psnr(&noisy, &clean, DEFAULT_PEAK)?));

    let dims = clean.dims().to_vec();
    let pasd = pasd_recover(&noisy, &PasdConfig::new(&dims, vec![rank_bound(rank) + 1; 3]))?;
    let snn = snn_recover(&noisy, &SnnConfig::new(&dims))?;
    let rpca = rpca_unfold_recover(&noisy, &RpcaConfig::default())?;
    for (name, x) in [("pasd", &pasd.x), ("snn", &snn.x), ("rpca", &rpca.x)] {
        println!("{name:<10}{:>10.2}", psnr(x, &clean, DEFAULT_PEAK)?);
    }
    Ok(())
}
