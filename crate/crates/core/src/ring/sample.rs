//! Seeded samplers for secrets, errors and uniform masks (COEFF domain).

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::poly::{Domain, RingParams, RnsPoly};
use crate::error::{Error, Result};

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn uniform_with<R: RngCore>(params: &Arc<RingParams>, limb_count: usize, rng: &mut R) -> RnsPoly {
    let limbs = params.moduli()[..limb_count]
        .iter()
        .map(|m| (0..params.n()).map(|_| rng.gen_range(0..m.value())).collect())
        .collect();
    RnsPoly::from_limbs(params, limbs, Domain::Coeff).expect("sampled residues are in range")
}

pub fn ternary_coeffs<R: RngCore>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1i64..=1)).collect()
}

/// Rounded Gaussian on [-⌈6σ⌉, ⌈6σ⌉] by inversion of a cumulative table:
/// one 64-bit draw and a binary search per coefficient.
pub fn gaussian_coeffs<R: RngCore>(n: usize, sigma: f64, rng: &mut R) -> Result<Vec<i64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("gaussian sigma {sigma} must be positive")));
    }
    let bound = (6.0 * sigma).ceil() as i64;
    let two_var = 2.0 * sigma * sigma;
    let weights: Vec<f64> = (-bound..=bound).map(|x| (-(x * x) as f64 / two_var).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let cdt: Vec<u64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            (acc.min(1.0) * u64::MAX as f64) as u64
        })
        .collect();
    Ok((0..n)
        .map(|_| {
            let r = rng.next_u64();
            let idx = cdt.partition_point(|&c| c < r).min(cdt.len() - 1);
            idx as i64 - bound
        })
        .collect())
}

pub fn sample_uniform(params: &Arc<RingParams>, seed: u64) -> RnsPoly {
    uniform_with(params, params.limb_count(), &mut rng_from_seed(seed))
}

pub fn sample_ternary(params: &Arc<RingParams>, seed: u64) -> RnsPoly {
    let c = ternary_coeffs(params.n(), &mut rng_from_seed(seed));
    RnsPoly::from_signed(params, &c, params.limb_count())
}

pub fn sample_gaussian(params: &Arc<RingParams>, sigma: f64, seed: u64) -> Result<RnsPoly> {
    let c = gaussian_coeffs(params.n(), sigma, &mut rng_from_seed(seed))?;
    Ok(RnsPoly::from_signed(params, &c, params.limb_count()))
}
