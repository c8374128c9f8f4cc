//! Reproducible random streams.
//!
//! Every replicate of every experiment draws from its own generator, derived
//! from `(master seed, stream tag, replicate index)` by a splitmix64 mix. The
//! derivation is a pure function of the triple, so results do not depend on
//! how replicates are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all sampling.
pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of replicate `index` on stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

/// Generator for a plain 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replicate `index` of stream `stream`.
pub fn replicate_rng(master: u64, stream: u64, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, stream, index))
}

/// Named stream tags, so unrelated consumers never share a stream.
pub mod streams {
    pub const FIELD: u64 = 1;
    pub const MIXTURE: u64 = 2;
    pub const CALIBRATION: u64 = 3;
    pub const UNIT_BLOCKS: u64 = 4;
    pub const RADIUS: u64 = 5;
    pub const PICKANDS: u64 = 6;
    pub const VALIDATION: u64 = 7;
}
