//! Seed derivation for reproducible, order-independent Monte Carlo streams.
//!
//! Every trial draws from its own `ChaCha8Rng`, seeded by mixing the base seed
//! with the trial's coordinates through the SplitMix64 finalizer. The mapping
//! is a pure function, so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `hash(base_seed, i0, i1, ...)`.
pub fn derive_seed(base_seed: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(base_seed), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
