//! Counter-based seed derivation.
//!
//! Every random stream in a render or a dataset is addressed by a tuple of
//! integers rather than drawn from a shared generator, so results never depend
//! on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream tags. Distinct tags give unrelated seeds for the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Network = 1,
    Palette = 2,
    Render = 3,
    Pass = 4,
}

/// Derives a seed from `base`, a stream tag and a key.
///
/// For fixed `base` and `stream` the map `key -> seed` is injective.
pub fn derive(base: u64, stream: Stream, key: u64) -> u64 {
    let salt = mix(mix(base) ^ (stream as u64).wrapping_mul(GOLDEN));
    mix(salt ^ key)
}

/// Packs a dataset slot and retry index into one key. Injective for
/// `retry < 2^20` and `slot < 2^44`.
pub fn slot_key(slot: usize, retry: usize) -> u64 {
    debug_assert!(retry < (1 << 20));
    ((slot as u64) << 20) | retry as u64
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
