//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream keyed by a base seed plus a small tuple of stream coordinates, so
//! that any step of a run can be replayed without carrying generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a list of stream coordinates.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix(seed), |acc, &c| {
        mix(acc ^ mix(c.wrapping_add(0x5851_F42D)))
    })
}

pub fn stream(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, coords))
}

/// Stream tags, kept distinct so that different consumers never share draws.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const CRITIC_STEP: u64 = 2;
    pub const GEN_STEP: u64 = 3;
    pub const EPOCH: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const SYNTH: u64 = 6;
    pub const INPAINT: u64 = 7;
    pub const TOY: u64 = 8;
    pub const EVAL: u64 = 9;
}
