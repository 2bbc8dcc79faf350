//! Seedable randomness for reproducible runs.
//!
//! Every experiment takes a single 64-bit master seed. Independent streams
//! (one per agent, channel, trial, ...) are derived from it in counter mode,
//! so batch parallelism cannot change results.

use rand::SeedableRng;

/// The generator used everywhere in the simulator. ChaCha keeps the stream
/// stable across platforms and crate versions.
pub type SimRng = rand_chacha::ChaCha12Rng;

/// One round of splitmix64; the standard seed-stretching permutation.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for a named stream from the master seed.
///
/// Streams are identified by small integers (agent ids, trial counters).
/// Distinct `(master, stream)` pairs map to distinct seeds with
/// overwhelming probability.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Fresh generator for a derived stream.
pub fn stream_rng(master: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream))
}
