//! Seeded RNG streams.
//!
//! Every independent consumer (a partition, a Monte Carlo chunk, the
//! Byzantine-set draw) gets its own ChaCha8 stream derived from the master
//! seed and a fixed stream id. Results therefore never depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Stream ids are namespaced so different subsystems never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Code,
    Byzantine,
    Task,
    Partition(u64),
    Chunk(u64),
}

impl Stream {
    fn id(self) -> u64 {
        const TAG: u64 = 1 << 60;
        match self {
            Stream::Code => 1,
            Stream::Byzantine => 2,
            Stream::Task => 3,
            Stream::Partition(j) => TAG | j,
            Stream::Chunk(k) => (2 * TAG) | k,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// Trials per chunk in [`par_count`]. Fixed so that chunk boundaries, and
/// hence every random draw, are independent of the thread count.
pub const TRIALS_PER_CHUNK: u64 = 4096;

/// Run `trials` Bernoulli experiments split into fixed chunks, chunk `k`
/// drawing from stream `Chunk(k)`. `chunk_fn(rng, first, len)` returns the
/// number of successes among trials `first..first + len`. The sum is
/// order-independent.
pub fn par_count<F>(seed: u64, trials: u64, chunk_fn: F) -> u64
where
    F: Fn(&mut StreamRng, u64, u64) -> u64 + Sync,
{
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = TRIALS_PER_CHUNK.min(trials - k * TRIALS_PER_CHUNK);
            chunk_fn(&mut stream(seed, Stream::Chunk(k)), k * TRIALS_PER_CHUNK, len)
        })
        .sum()
}
