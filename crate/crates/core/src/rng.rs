//! Seed derivation and counter-based random streams.
//!
//! Every stochastic component derives its generator from a `(seed, key...)`
//! tuple so that results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of keys into a single 64-bit value.
pub fn mix(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// A ChaCha8 stream keyed by `seed` and a domain-separating key path.
pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, keys))
}

/// Uniform value in `[0, 1)` from a counter-based hash.
#[inline]
pub fn unit_f64(seed: u64, keys: &[u64]) -> f64 {
    (mix(seed, keys) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
