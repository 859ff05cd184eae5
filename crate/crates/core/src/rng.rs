//! Seeded, portable random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair using
//! ChaCha8's native stream parameter, so streams never overlap and adding
//! draws to one stream leaves every other stream untouched.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent child seed; used to split a master seed.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    substream(seed, stream).next_u64()
}
