//! Counter-based random substreams.
//!
//! Every (seed, drop, link) triple maps to its own ChaCha8 stream so the
//! schedule of parallel workers cannot change any drawn value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tag for the per-drop global stage (mergence, RCS draws).
pub const GLOBAL_STREAM: u32 = u32::MAX;

/// Deterministic generator for one (drop, link) pair.
pub fn substream(seed: u64, drop: u32, link: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(drop) << 32) | u64::from(link));
    rng
}

/// Deterministic generator for the global per-drop stage.
pub fn global_substream(seed: u64, drop: u32) -> SimRng {
    substream(seed, drop, GLOBAL_STREAM)
}

/// Plain seeded generator for analysis and tests.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
