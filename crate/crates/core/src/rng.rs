//! Seedable random streams.
//!
//! Every sampling routine takes an owned or borrowed [`SimRng`]. Parallel
//! callers derive one stream per sample index with [`stream`], so results
//! do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Root generator for `seed` (stream 0).
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for a two-level index such as (EM iteration, sample).
pub fn substream(seed: u64, outer: u64, inner: u64) -> SimRng {
    stream(seed, (outer << 32) ^ (inner & 0xffff_ffff))
}
