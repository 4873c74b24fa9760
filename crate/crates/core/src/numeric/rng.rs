//! Seeded random number generation.
//!
//! Every experiment owns its generators. The algorithm is ChaCha8 from
//! `rand_chacha`, keyed from a 64-bit seed via `seed_from_u64`; independent
//! components of one run draw from separate ChaCha streams of the same key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng64 = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for a named sub-component of a run; streams never overlap.
pub fn stream(seed: u64, stream: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids, fixed so that reordering code does not change results.
pub mod streams {
    pub const AE_INIT: u64 = 1;
    pub const AE_SHUFFLE: u64 = 2;
    pub const KMEANS: u64 = 3;
    pub const GCN_INIT: u64 = 4;
    pub const BASES: u64 = 5;
    pub const SILHOUETTE: u64 = 6;
    pub const BIRCH_PILOT: u64 = 7;
    pub const SYNTH: u64 = 8;
}
