//! Deterministic random streams.
//!
//! Every stochastic quantity in the crate (parameter initialization, disorder
//! couplings, shot sampling, bootstrap resampling) is drawn from a ChaCha8
//! stream seeded with a 64-bit value. Uniform and Gaussian variates are
//! derived here from raw `u64` words rather than through `rand`'s
//! distribution traits, so a given seed produces the same numbers on every
//! platform and across `rand` releases.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a tag into a new seed (SplitMix64 finalizer), so
/// related streams do not start from neighbouring seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
pub fn uniform01(rng: &mut Stream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[-half_width, half_width]`.
pub fn uniform_symmetric(rng: &mut Stream, half_width: f64) -> f64 {
    half_width * (2.0 * uniform01(rng) - 1.0)
}

/// A pair of independent standard normal variates (Box–Muller transform).
pub fn standard_normal_pair(rng: &mut Stream) -> (f64, f64) {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Fills `n` standard normal variates, consuming Box–Muller pairs in order.
pub fn standard_normals(rng: &mut Stream, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let (a, b) = standard_normal_pair(rng);
        out.push(a);
        out.push(b);
    }
    out.truncate(n);
    out
}

/// Number of successes in `trials` Bernoulli draws with success probability `p`.
pub fn binomial(rng: &mut Stream, trials: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Index drawn uniformly from `0..n`.
pub fn index(rng: &mut Stream, n: usize) -> usize {
    debug_assert!(n > 0);
    // n is far below 2^53 everywhere this is used, so the bias is negligible.
    ((uniform01(rng) * n as f64) as usize).min(n - 1)
}
