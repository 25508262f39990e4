//! Splittable seeding: one master seed, independent ChaCha streams per consumer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `master`.
pub fn stream_rng(master: u64, stream: u64) -> SolverRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}
