//! Random streams.
//!
//! Lattice occupancy uses a counter-based generator: every draw is a pure
//! function of `(seed, realization, site key, channel)` hashed with the
//! SplitMix64 finalizer. Lattices of different sizes built from one seed are
//! therefore nested, and realizations can be evaluated in any order.
//!
//! Sequential noise (decay curves, shot noise) uses ChaCha8 with the seed as
//! key and a caller-chosen stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const LATTICE_RNG_ALGORITHM: &str = "splitmix64-counter";
pub const STREAM_RNG_ALGORITHM: &str = "chacha8";

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in [0, 1) keyed by the full counter tuple.
#[inline]
pub fn counter_uniform(seed: u64, realization: u64, site_key: u64, channel: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(realization ^ splitmix64(site_key ^ splitmix64(channel))));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Packs integer cell coordinates and a basis index into one key.
/// Cell coordinates must lie within +/- 2^19.
#[inline]
pub fn site_key(i: i64, j: i64, k: i64, basis: usize) -> u64 {
    const OFF: i64 = 1 << 19;
    const MASK: u64 = (1 << 20) - 1;
    let pack = |v: i64| ((v + OFF) as u64) & MASK;
    (pack(i) << 44) | (pack(j) << 24) | (pack(k) << 4) | (basis as u64 & 0xF)
}

/// Independent ChaCha8 stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
