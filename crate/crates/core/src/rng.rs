//! Seeded randomness. Every stochastic routine takes an explicit `u64` seed
//! and draws from a ChaCha8 stream; sub-streams are derived with SplitMix64
//! so that trial `i` of a run never depends on how many values trial `i-1`
//! consumed.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CVec, RVec};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Circular complex Gaussian with `E|z|^2 = variance`.
pub fn complex_normal(rng: &mut Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    Complex64::new(s * normal(rng), s * normal(rng))
}

/// Vector of i.i.d. circular complex Gaussians with `E|z_i|^2 = 1`.
pub fn complex_gaussian_vec(rng: &mut Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng, 1.0))
}

/// Real Gaussian vector embedded in `C^n`.
pub fn real_gaussian_vec(rng: &mut Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(normal(rng), 0.0))
}

pub fn real_vec(rng: &mut Rng, n: usize) -> RVec {
    RVec::from_fn(n, |_, _| normal(rng))
}
