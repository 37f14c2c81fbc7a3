//! Seeding and substream derivation.
//!
//! Every run uses ChaCha8. The key comes from a 64-bit seed through
//! `SeedableRng::seed_from_u64`, and sample `i` of an ensemble uses ChaCha
//! stream `i` of that key, so substreams never overlap and do not depend on
//! how the work is scheduled. Per-point seeds of a sweep are obtained by
//! folding the parameter tuple into the base seed with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Recorded in output metadata next to every seed.
pub const GENERATOR_NAME: &str =
    "ChaCha8Rng(rand_chacha 0.9; seed_from_u64 key, stream = sample index)";

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for sample `index` of the ensemble seeded by `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Folds a sequence of words into `seed`.
pub fn derive_seed(seed: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    words
        .into_iter()
        .fold(splitmix64(seed), |acc, w| splitmix64(acc ^ splitmix64(w)))
}
