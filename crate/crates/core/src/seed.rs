//! Deterministic seed derivation.
//!
//! Every random stream in the crate (setpoint draws, policy initialization,
//! exploration noise, minibatch shuffling, evaluation episodes) is derived
//! from one master seed through [`derive`], so a run is reproducible from a
//! single number.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent substream seed from a master seed and a stream index.
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Seed offset separating evaluation setpoint streams from training streams.
pub const EVAL_STREAM_OFFSET: u64 = 1000;

/// Build the crate's standard RNG from a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
