//! Seed derivation and seeded sampling helpers.
//!
//! Every generator in this crate is a deterministic function of its inputs
//! and a `u64` seed. Sub-streams are derived with splitmix64 so that
//! per-edge / per-vertex streams are independent of iteration order.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::CVector;

pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for a tagged sub-stream.
pub(crate) fn subseed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

pub(crate) fn rng_from(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(subseed(seed, tag))
}

/// Standard complex normal entry: independent N(0,1) real and imaginary parts.
pub(crate) fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub(crate) fn random_complex_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    DVector::from_fn(n, |_, _| complex_normal(rng))
}

/// Random vector normalised to unit Euclidean norm; redraws on the
/// (measure-zero) event of a zero draw.
pub(crate) fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = random_complex_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}
