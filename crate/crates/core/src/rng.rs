//! Seed derivation for independent trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used by every simulation in the crate.
pub type TrialRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for trial `index` of a run seeded with `master`.
/// Pure integer arithmetic, so identical on every platform.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    rng_from_seed(derive_seed(master, index))
}
