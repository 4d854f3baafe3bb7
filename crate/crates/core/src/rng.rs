//! Reproducible random streams.
//!
//! Every scalar draw in the crate is addressed by `(master seed, stream,
//! sample index)`. The triple is mixed into a fresh ChaCha8 key, so any
//! sample can be generated independently of evaluation order — parallel
//! runs with different worker counts produce bit-identical results.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream-id tags; combined with a small per-input index via [`stream_id`].
pub mod streams {
    pub const PROPAGATE: u64 = 1;
    pub const PICK_FREEZE_A: u64 = 2;
    pub const PICK_FREEZE_B: u64 = 3;
    pub const FAST_PHASES: u64 = 4;
}

/// Builds a stream id from a domain tag and an index (e.g. input column).
pub fn stream_id(domain: u64, index: u64) -> u64 {
    (domain << 32) ^ index
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for one (stream, sample) cell. Draw as many values as needed; the
/// generator is independent of every other cell.
pub fn sample_rng(master_seed: u64, stream: u64, sample: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ 0x517cc1b727220a95;
    let mut key = [0u8; 32];
    let words = [
        splitmix64(&mut state),
        splitmix64(&mut state) ^ stream,
        splitmix64(&mut state) ^ sample,
        splitmix64(&mut state) ^ stream.rotate_left(17) ^ sample.rotate_left(43),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        // One extra mixing round so that related (stream, sample) pairs do
        // not produce related keys.
        let mut s = w;
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw on the open interval (0, 1); never returns 0 or 1, so it is
/// safe to feed a quantile function.
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}
