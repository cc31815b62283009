//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every stochastic routine takes a `u64` seed. Nested streams (replication,
//! design, restart) are derived by mixing the parent seed with integer tags,
//! so a replication's randomness depends only on its coordinates and never on
//! the order in which workers pick it up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`, producing a child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(seed), |acc, &t| {
        splitmix(acc ^ splitmix(t.wrapping_add(GOLDEN)))
    })
}

/// A ChaCha stream keyed by `seed` and `tags`.
pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
