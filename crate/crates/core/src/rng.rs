//! Deterministic random streams.
//!
//! Every random quantity in the simulator is drawn from a ChaCha8 stream
//! addressed by `(seed, purpose, index)`. The seed is mixed with a purpose
//! tag through SplitMix64 to form the ChaCha key, and `index` selects the
//! ChaCha stream id. Streams are therefore counter-based: segment `i` of a
//! fiber can be generated on any thread, in any order, with identical output.
//!
//! Monte-Carlo runs fan out from a master seed with [`run_seed`], so a single
//! run `r` of a scenario is re-derivable from `(master_seed, r)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Per-segment fiber parameters (Θ, β, γ, scatterers).
    Segment = 0x5345_474d,
    /// Laser phase walk of one fiber run.
    Laser = 0x4c41_5345,
    /// Additive receiver noise, one stream per segment.
    Receiver = 0x5243_5652,
    /// Misalignment angle: initial draw and jitter.
    Theta = 0x5448_4554,
    /// Fan-out of a master seed into per-run seeds.
    Run = 0x5255_4e53,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> Stream {
    let key = splitmix64(seed ^ splitmix64(purpose as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Seeds of one Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub fiber: u64,
    pub noise: u64,
    pub theta: u64,
}

/// `run_seed(master, r)`: `fiber = H(master, r, 1)`, `noise = H(master, r, 2)`,
/// `theta = H(master, r, 3)` with `H(m, r, k) = splitmix64(splitmix64(m ^ RUN) + 4r + k)`.
pub fn run_seed(master: u64, run: u64) -> RunSeeds {
    let base = splitmix64(master ^ Purpose::Run as u64);
    let h = |k: u64| splitmix64(base.wrapping_add(run.wrapping_mul(4)).wrapping_add(k));
    RunSeeds {
        fiber: h(1),
        noise: h(2),
        theta: h(3),
    }
}
