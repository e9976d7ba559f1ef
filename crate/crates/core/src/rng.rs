//! Keyed random streams.
//!
//! Every stochastic step draws from a stream derived from the run seed and a
//! tuple of keys (model index, round, example id, view, ...). Streams never
//! depend on call order, so sequential and snapshot schedules consume the
//! same randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams for different purposes apart.
pub mod tag {
    pub const SPLIT_CLASSES: u64 = 0x5350_4c49;
    pub const SPLIT_SHOTS: u64 = 0x5348_4f54;
    pub const AUG_WEAK: u64 = 0x5745_414b;
    pub const AUG_STRONG: u64 = 0x5354_524f;
    pub const SUBSAMPLE: u64 = 0x5355_4253;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const MONTE_CARLO: u64 = 0x4d43_5654;
    pub const GENERATOR: u64 = 0x4745_4e52;
    pub const PRETRAIN: u64 = 0x5052_4554;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with an ordered key tuple into a new 64-bit seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k)))
}

pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// A single uniform draw in `[0, 1)` fixed by `(seed, keys)`.
pub fn unit(seed: u64, keys: &[u64]) -> f64 {
    (derive_seed(seed, keys) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
