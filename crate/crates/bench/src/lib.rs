//! Shared stream fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `len` items drawn uniformly from `[0, universe)`.
pub fn uniform_stream(len: usize, universe: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0..universe)).collect()
}
