//! Deterministic seed derivation for parallel substreams.
//!
//! Every random decision in the crate draws from a [`ChaCha8Rng`] seeded
//! through [`substream_seed`], so a single master seed pins down the entire
//! simulation regardless of thread scheduling. The mixing function is fixed:
//! results are portable across runs of the same build.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on `u64`.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of substream `stream` from a master seed.
///
/// Defined as `splitmix64(master + (stream + 1) * GOLDEN_GAMMA)` with the
/// canonical SplitMix64 gamma. The `+ 1` keeps stream 0 distinct from the
/// master seed itself.
pub fn substream_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// A generator for substream `stream` of `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, stream))
}
