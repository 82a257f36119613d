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


//! Tensor files and run manifests: write, read back, and catch a truncated
//! file.
//!
//! `cargo run --example tensor_io`

use tenrec::io::{read_tensor, write_tensor, Manifest};
use tenrec::synth::{checksum, gen_lowrank_tucker, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec {
        dims: vec![6, 5, 4],
        ranks: vec![2, 2, 2],
        corruption_fraction: 0.0,
        seed: 11,
    };
    let t = gen_lowrank_tucker(&spec)?;
    let path = dir.path().join("t.tnsr");
    write_tensor(&t, &path)?;
    let back = read_tensor(&path)?;
    println!("dims {:?} checksum {:016x} round trip exact: {}", back.dims(), checksum(&back), back == t);

    let mut m = Manifest::new();
    m.set_list("dims", t.dims()).set_f64("frobenius", t.norm(tenrec::NormKind::Frobenius));
    let mpath = dir.path().join("t.manifest");
    m.write(&mpath)?;
    print!("{}", std::fs::read_to_string(&mpath)?);
    let dims: Vec<usize> = Manifest::read(&mpath)?.parse_list("dims")?;
    println!("parsed dims {dims:?}");

    let bytes = std::fs::read(&path)?;
    std::fs::write(&path, &bytes[..bytes.len() - 3])?;
    match read_tensor(&path) {
        Ok(_) => println!("truncated file unexpectedly read"),
        Err(e) => println!("truncated file rejected: {e}"),
    }
    Ok(())
}
