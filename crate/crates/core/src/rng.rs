//! Counter-based seeding.
//!
//! Every random stream in the pipeline is keyed by a tuple of integers
//! (run seed, purpose tag, instance, coalition, trial, ...). The tuple is
//! folded through splitmix64 into a 64-bit key that seeds a ChaCha8 stream,
//! so the draws for one key never depend on how many other keys were used
//! before it or on which thread asked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a sequence of words into a single 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// FNV-1a, used to turn labels (instance ids, stage names) into words.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Named sub-seed derived from a run seed.
pub fn sub_seed(seed: u64, name: &str) -> u64 {
    mix(&[seed, hash_str(name)])
}

/// A fresh generator for the given key tuple.
pub fn stream(words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(words))
}
