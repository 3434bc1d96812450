//! Deterministic random substreams.
//!
//! Every randomized stage derives its generator from the master seed and a
//! short tag path (phase, layer, node, run...). Work can then be split across
//! threads in any order without changing the draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub(crate) mod phase {
    pub const SEED_LAYER: u64 = 1;
    pub const PROPOSE: u64 = 2;
    pub const VALIDATE: u64 = 3;
    pub const RESAMPLE_DEGREES: u64 = 4;
    pub const WALK: u64 = 10;
    pub const MFPT: u64 = 11;
    pub const SIR: u64 = 12;
    pub const SYNTHETIC: u64 = 30;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for the stream identified by `seed` and `tags`.
pub fn substream(seed: u64, tags: &[u64]) -> StreamRng {
    let mut state = splitmix64(seed);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    ChaCha8Rng::seed_from_u64(state)
}
