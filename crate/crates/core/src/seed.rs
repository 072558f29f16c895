//! Counter-based seed derivation. Every random quantity is a pure function
//! of a seed and an index, so parallel trials never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TRIAL_DOMAIN: u64 = 0x005E_ED0F_7121_A100;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `(seed, index)`. Injective in `index` for a fixed seed.
#[inline]
pub fn keyed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)))
}

/// Seed for trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    keyed(master ^ TRIAL_DOMAIN, index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
