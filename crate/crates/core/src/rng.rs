//! Deterministic random-number helpers.
//!
//! Every stochastic choice in this crate (corpus splits, batch shuffles,
//! parameter init, synthetic data) flows through the primitives below so
//! that a 64-bit seed reproduces runs bit-for-bit, on any platform and
//! across dependency upgrades. The concrete choices are:
//!
//! - Generator: ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded through
//!   `SeedableRng::seed_from_u64`, which expands the seed with SplitMix64.
//! - Integer draws: `next_u64() % n` (documented modulo bias of at most
//!   n / 2^64, negligible for the ranges used here).
//! - Uniform floats on (0, 1]: top 53 bits of `next_u64`, shifted by one
//!   so the value is never zero.
//! - Gaussians: Box–Muller on two such uniforms (cosine branch only).
//! - String-keyed seeds: FNV-1a 64 (offset 0xcbf29ce484222325, prime
//!   0x100000001b3) over the parts joined by a 0xFF separator byte, which
//!   cannot occur in UTF-8 text.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Fresh ChaCha20 stream for a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// FNV-1a 64 over `parts`, with a 0xFF separator between parts.
pub fn stable_hash64(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            eat(0xFF);
        }
        for &b in *part {
            eat(b);
        }
    }
    h
}

/// Uniform integer in `[0, n)`. `n` must be nonzero.
pub fn uniform_below(rng: &mut ChaCha20Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    rng.next_u64() % n
}

/// Uniform float in (0, 1].
pub fn uniform_open01(rng: &mut ChaCha20Rng) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
}

/// Standard-normal draw via Box–Muller.
pub fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Vector of independent N(0, std^2) draws.
pub fn gaussian_vec(rng: &mut ChaCha20Rng, len: usize, std: f64) -> Vec<f64> {
    (0..len).map(|_| std * standard_normal(rng)).collect()
}

/// In-place Fisher–Yates shuffle driven by `uniform_below`.
pub fn shuffle<T>(rng: &mut ChaCha20Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_below(rng, (i + 1) as u64) as usize;
        items.swap(i, j);
    }
}
