//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`
//! derived from the experiment's root seed by hashing a path of integer tags
//! (trial index, demo index, rollout index, stream purpose) through SplitMix64.
//! The same root seed and tag path always produce the same stream, independent
//! of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes, used as the final tag when deriving a seed.
pub mod stream {
    pub const RESET: u64 = 0x7265_7365;
    pub const DISTURBANCE: u64 = 0x6469_7374;
    pub const CONTROLLER: u64 = 0x6374_726c;
    pub const JITTER: u64 = 0x6a69_7474;
    pub const DEMOS: u64 = 0x6465_6d6f;
    pub const EVAL: u64 = 0x6576_616c;
    pub const TRIAL: u64 = 0x7472_6961;
    pub const ASCENT: u64 = 0x6173_6365;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `root` and a path of tags.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(root), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn rng_for(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tags))
}
