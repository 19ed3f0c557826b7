//! Seed derivation. Every random stream in the crate is keyed by a master
//! seed plus an index so parallel work never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let a = mix64(seed.wrapping_add(GOLDEN));
    let b = mix64(a ^ stream.wrapping_mul(GOLDEN).wrapping_add(1));
    mix64(b ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(2))
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

// Stream tags, one per consumer.
pub(crate) const STREAM_SYNTH_ROW: u64 = 1;
pub(crate) const STREAM_SYNTH_ONGOING: u64 = 2;
pub(crate) const STREAM_SYNTH_GROUPS: u64 = 3;
pub(crate) const STREAM_SPLIT: u64 = 4;
pub(crate) const STREAM_TREE: u64 = 5;
pub(crate) const STREAM_SVD: u64 = 6;
pub(crate) const STREAM_SEARCH: u64 = 7;
pub(crate) const STREAM_TRIAL: u64 = 8;
