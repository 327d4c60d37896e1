//! Deterministic random streams. Same seed, same draws, on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Create the root random stream for a run.
pub fn rng_create(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent substream from a seed, e.g. one per concern
/// (dataset generation, split, weight init, noise) so adding draws to one
/// never shifts another.
pub fn rng_substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Well-known substream ids used by the experiment runner.
pub mod streams {
    pub const DATASET: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const WEIGHTS: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const ORDER: u64 = 5;
}
