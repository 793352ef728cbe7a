//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed, with a separate
//! 64-bit stream id per consumer (one per generated matrix, one for starting
//! points). Uniform draws use the top 53 bits of `next_u64`, so the same
//! `(seed, stream)` pair yields the same doubles in any implementation of
//! ChaCha8.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used by the harness to sample starting points.
pub const START_POINT_STREAM: u64 = 0x5354_4152_5453; // "STARTS"

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform double in `[0, 1)`.
#[inline]
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform double in `[lo, hi)`.
#[inline]
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}
