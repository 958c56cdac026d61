//! Seeded random streams.
//!
//! Work is always split into blocks of fixed size; block `b` draws from stream
//! `b` of a ChaCha8 generator keyed by the master seed. Because the block
//! layout never depends on the thread count, neither do the outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples drawn from one stream in blocked Monte Carlo loops.
pub const SAMPLE_BLOCK: u64 = 1024;

/// Returns the generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `samples` into `(block index, start, len)` triples of [`SAMPLE_BLOCK`].
pub fn blocks(samples: u64) -> impl Iterator<Item = (u64, u64, u64)> {
    let count = samples.div_ceil(SAMPLE_BLOCK);
    (0..count).map(move |b| {
        let start = b * SAMPLE_BLOCK;
        (b, start, (samples - start).min(SAMPLE_BLOCK))
    })
}
