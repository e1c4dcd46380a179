//! Keyed random streams for reproducible parallel Monte Carlo.
//!
//! Every random decision in the crate draws from a stream addressed by
//! `(master_seed, a, b)`. The key is derived from `(master_seed, a)` and `b`
//! selects the ChaCha stream, so a task's draws never depend on which worker
//! ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags keep streams of unrelated subsystems apart when they share a
/// master seed.
pub mod domain {
    pub const GENERATOR: u64 = 0x4745_4e00;
    pub const PARAM_INIT: u64 = 0x494e_4954;
    pub const DROPOUT: u64 = 0x4452_4f50;
    pub const NEIGHBOR_ORDER: u64 = 0x4e42_5244;
    pub const KMEANS: u64 = 0x4b4d_4e53;
    pub const EPOCH_ORDER: u64 = 0x4550_4f43;
    pub const SPREAD: u64 = 0x5350_5244;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for task `(a, b)` under `master_seed`.
///
/// In labeling `a` is the source node and `b` the run index.
pub fn substream(master_seed: u64, a: u64, b: u64) -> Stream {
    let mut state = master_seed ^ a.rotate_left(32).wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(b);
    rng
}

/// Derive a child master seed, e.g. one per subsystem.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut state = master_seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(&mut state)
}
