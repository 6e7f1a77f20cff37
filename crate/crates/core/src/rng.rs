//! Seeded random sources.
//!
//! Every per-item random decision draws from its own ChaCha8 stream keyed by
//! the run seed and the item's id, so a sharded or multi-threaded run makes
//! exactly the same draws as a sequential one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for run-level decisions (shuffles, subsampling).
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the item with the given id: the run seed selects the key,
/// the id selects the stream.
pub fn for_item(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
