//! Seed derivation and stream splitting.
//!
//! Every run uses `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(stream)`.
//! Grid-point seeds come from [`derive_seed`], a SplitMix64 chain over the
//! master seed, an axis tag and the IEEE-754 bits of the swept value, so they
//! do not depend on execution order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in simulation reports.
pub const PRNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64, set_stream)";

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, axis: &str, value: f64) -> u64 {
    let axis_tag = axis.bytes().fold(0u64, |h, b| splitmix64(h ^ u64::from(b)));
    splitmix64(splitmix64(master ^ axis_tag) ^ value.to_bits())
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
