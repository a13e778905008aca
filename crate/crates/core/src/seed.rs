//! Seed derivation for order-independent random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is
//! derived from a master seed and a path of integers (dataset entry, epoch,
//! ensemble member, ...). Two different paths give unrelated streams, so
//! work can be split across threads without changing any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate. Harness code defines its own tags
/// above `0x1000`.
pub mod tag {
    pub const CHANNEL: u64 = 1;
    pub const PILOT_NOISE: u64 = 2;
    pub const INIT_GUESS: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const ENSEMBLE: u64 = 5;
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `master`, producing a well-mixed child seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}
