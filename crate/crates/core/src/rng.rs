//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 seeded with
//! `seed_from_u64(seed)`. Replication `r` of a study uses stream `r` of the
//! same key, so replications are disjoint and independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, replication: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
