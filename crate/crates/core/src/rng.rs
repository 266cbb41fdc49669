//! Splittable, counter-based randomness.
//!
//! Every stochastic operation in this crate takes an explicit `u64` stream
//! key. Sub-streams are derived with [`derive`], never by sharing generator
//! state, so the same key always reproduces the same draws regardless of
//! execution order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent child key from `key` and a lane/counter `index`.
///
/// SplitMix64 finalizer over the pair. The golden-ratio multiplier keeps
/// nearby indices far apart before the avalanche rounds.
#[inline]
pub fn derive(key: u64, index: u64) -> u64 {
    let mut z = key ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one stream key. ChaCha8 is counter-based and portable:
/// identical keys give bit-identical sequences on every platform.
#[inline]
pub fn rng_from(key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key)
}
