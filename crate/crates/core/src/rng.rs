//! Independent, reproducible RNG streams.
//!
//! Every stochastic component of an experiment gets its own ChaCha stream:
//! the key comes from the master seed and the 64-bit stream id packs
//! `(cell, replicate, role)`. Streams never overlap, so results do not
//! depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for within one replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamRole {
    Environment = 0,
    Direct = 1,
    Metropolis = 2,
    Coupled = 3,
    LevyMetropolis = 4,
    Oracle = 5,
}

const CELL_BITS: u32 = 24;
const REPLICATE_BITS: u32 = 32;

/// Stream for `(cell, replicate, role)` under `master_seed`.
///
/// # Panics
/// If `cell >= 2^24` or `replicate >= 2^32`.
pub fn stream(master_seed: u64, cell: usize, replicate: usize, role: StreamRole) -> SimRng {
    assert!(
        (cell as u64) < 1 << CELL_BITS,
        "cell index {cell} too large"
    );
    assert!(
        (replicate as u64) < 1 << REPLICATE_BITS,
        "replicate index {replicate} too large"
    );
    let id = ((cell as u64) << (REPLICATE_BITS + 8)) | ((replicate as u64) << 8) | role as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}
