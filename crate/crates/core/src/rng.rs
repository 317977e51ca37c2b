//! Seed derivation for reproducible randomness.
//!
//! Every random quantity in the crate is keyed by a user seed plus a list of
//! integer tags (row index, trial index, ...). Identical keys produce
//! identical streams on every platform and in any generation order, which is
//! what lets sketch rows materialize independently and experiment trials run
//! under any scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of tags into a single 64-bit key.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    for &t in tags {
        acc = splitmix64(acc ^ splitmix64(t ^ 0xE703_7ED1_A0B4_28DB));
    }
    acc
}

/// Deterministic generator for the given (seed, tags) key.
pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, tags))
}
