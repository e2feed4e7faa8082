//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by a 64-bit
//! seed and a stream id. ChaCha is counter based, so a stream depends only
//! on `(seed, stream id)` and never on which worker thread consumes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PRICE_STREAM: u64 = 0;
pub const VOL_STREAM: u64 = 1;
pub const VOL_JUMP_STREAM: u64 = 2;
pub const PRICE_JUMP_STREAM: u64 = 3;
pub const ORACLE_STREAM: u64 = 16;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `seed` (replication, batch, ...).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
