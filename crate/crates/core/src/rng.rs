//! Seeded randomness. Every stochastic routine in the crate draws from a
//! ChaCha8 stream derived from an explicit `u64` seed, so results are
//! reproducible across runs and independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for the `index`-th independent unit of work (trial, restart,
/// grid cell). The stream for index `i` is `seeded(seed + i)`.
pub fn substream(seed: u64, index: u64) -> Rng {
    seeded(seed.wrapping_add(index))
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
