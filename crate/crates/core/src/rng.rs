//! Deterministic random-number streams.
//!
//! Every randomized routine in this crate draws from a named stream derived
//! from a single `u64` seed. A stream is a ChaCha8 generator keyed by
//! `SHA-256(seed as 8 LE bytes || label bytes || index as 8 LE bytes)`, so a
//! `(seed, label, index)` triple denotes the same byte sequence on every
//! platform. All primitive draws are fixed algorithmically on top of the raw
//! word stream and never depend on helper-crate internals:
//!
//! * `uniform_u32(n)`: rejection sampling on `next_u32` below the largest
//!   multiple of `n`, then reduction modulo `n`.
//! * `uniform_f64()`: top 53 bits of `next_u64`, scaled by 2^-53.
//! * `sample_distinct(k, n)`: partial Fisher-Yates over `0..n`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest as _, Sha256};

/// Derives the independent stream named by `(label, index)` from a root seed.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Unbiased draw from `0..n`. `n` must be nonzero.
pub fn uniform_u32(rng: &mut impl RngCore, n: u32) -> u32 {
    debug_assert!(n > 0);
    if n.is_power_of_two() {
        return rng.next_u32() & (n - 1);
    }
    // Draws at or above the largest multiple of n in 2^32 would bias the low
    // residues, so they are rejected.
    let limit = ((1u64 << 32) / n as u64) * n as u64;
    loop {
        let x = rng.next_u32();
        if (x as u64) < limit {
            return x % n;
        }
    }
}

/// Unbiased draw from `0..n` for index-sized ranges.
pub fn uniform_usize(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0 && n <= u32::MAX as usize);
    uniform_u32(rng, n as u32) as usize
}

/// Uniform draw from `[0, 1)` with 53 bits of precision.
pub fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli draw with success probability `p`.
pub fn bernoulli(rng: &mut impl RngCore, p: f64) -> bool {
    uniform_f64(rng) < p
}

/// Draws `k` distinct indices from `0..n`, in selection order.
pub fn sample_distinct(rng: &mut impl RngCore, k: usize, n: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_usize(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_usize(rng, i + 1);
        items.swap(i, j);
    }
}
