//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded with `seed_from_u64(seed)` and switched to a fixed stream number per
//! consumer, so two consumers sharing a seed never share a stream. Uniform
//! doubles are the top 53 bits of a 64-bit output scaled by 2^-53; Gaussian
//! draws use the cosine branch of Box-Muller on two such uniforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream numbers handed out to the stochastic parts of the crate.
pub mod stream {
    pub const TWO_MOONS_TRAIN: u64 = 1;
    pub const TWO_MOONS_TEST: u64 = 2;
    pub const TWO_MOONS_CANDIDATES: u64 = 3;
    pub const RFF: u64 = 10;
    pub const KMEANS: u64 = 20;
    pub const BENCH_RANDOM: u64 = 30;
    pub const BENCH_NOISE: u64 = 31;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[0, 1)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Standard normal draw (Box-Muller, one output per call).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U keeps the log argument in (0, 1].
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
