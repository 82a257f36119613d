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

//! Seeded random streams.
//!
//! Every random draw comes from ChaCha8 keyed by a 64-bit seed, with the
//! ChaCha stream id selecting the purpose, so the core tensor, each factor
//! matrix and the corruption pattern of one instance never share a stream.
//! Per-trial seeds are derived from a base seed with splitmix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Core,
    Factor(u32),
    CorruptionPositions,
    CorruptionValues,
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Core => 1,
            Purpose::CorruptionPositions => 2,
            Purpose::CorruptionValues => 3,
            Purpose::Factor(n) => 0x100 + n as u64,
        }
    }
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream_id());
    rng
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for trial `trial` of an experiment started from `base`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    splitmix64(base ^ splitmix64(trial))
}
