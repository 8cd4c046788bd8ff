//! Counter-based random streams.
//!
//! Every parallel unit of work (a tuple, a Monte Carlo trial, a candidate
//! estimate) draws from its own ChaCha stream keyed by the master seed, a
//! domain tag and a work index. Results therefore never depend on how rayon
//! splits the work or how many workers it has.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags. Selection and evaluation draw from disjoint domains so that
/// an evaluation never reuses the samples a selector was fitted on.
pub mod domain {
    pub const OPT_ESTIMATION: u64 = 0x6f70_745f_6573_7431;
    pub const FINAL_SELECTION: u64 = 0x6669_6e61_6c5f_7365;
    pub const EVALUATION: u64 = 0x6576_616c_5f74_7570;
    pub const MONTE_CARLO: u64 = 0x6d63_5f74_7269_616c;
    pub const GREEDY_MC: u64 = 0x6772_6565_6479_5f6d;
    pub const RANDOM_SEEDS: u64 = 0x7261_6e64_5f73_6565;
    pub const GENERATOR: u64 = 0x6765_6e5f_706f_7765;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 256-bit key from the master seed and a path of tags.
fn key(master: u64, path: &[u64]) -> [u8; 32] {
    let mut state = master;
    let mut acc = splitmix64(&mut state);
    for &tag in path {
        state ^= tag.wrapping_mul(0xd6e8_feb8_6659_fd93);
        acc ^= splitmix64(&mut state);
    }
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).wrapping_add(acc).to_le_bytes());
    }
    out
}

/// The stream for work item `index` inside `domain`.
pub fn stream(master: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::from_seed(key(master, &[domain]));
    rng.set_stream(index);
    rng
}

/// Like [`stream`] but with a longer key path, for nested work such as
/// (round, candidate) pairs.
pub fn stream_path(master: u64, path: &[u64], index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::from_seed(key(master, path));
    rng.set_stream(index);
    rng
}
