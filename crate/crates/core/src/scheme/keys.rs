use std::sync::Arc;

use rand::RngCore;

use super::params::SchemeParams;
use crate::error::Result;
use crate::ring::{gaussian_coeffs, rng_from_seed, ternary_coeffs, uniform_with, Domain, RnsPoly};

/// Digit width of the relinearization decomposition.
pub const RELIN_DIGIT_BITS: u32 = 20;

pub struct SecretKey {
    pub(crate) params: Arc<SchemeParams>,
    /// Ternary secret, NTT domain, all limbs.
    pub(crate) s: RnsPoly,
}

#[derive(Clone)]
pub struct PublicKey {
    pub(crate) params: Arc<SchemeParams>,
    pub(crate) b: RnsPoly,
    pub(crate) a: RnsPoly,
}

/// Key-switching material for s² -> s, one entry per (limb j, digit k).
///
/// Entry (j, k) encrypts 2^(w·k)·s² multiplied by the RNS unit vector of limb
/// j (1 modulo q_j, 0 modulo every other prime), so truncating the entries to
/// the first ℓ limbs yields a valid key at every level ℓ.
#[derive(Clone)]
pub struct RelinKey {
    pub(crate) params: Arc<SchemeParams>,
    pub(crate) entries: Vec<(RnsPoly, RnsPoly)>,
}

pub struct KeySet {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub relin: RelinKey,
}

pub fn digits_for_limb(params: &SchemeParams, limb: usize) -> usize {
    params.ring().moduli()[limb].bits().div_ceil(RELIN_DIGIT_BITS) as usize
}

pub fn relin_entry_count(params: &SchemeParams) -> usize {
    (0..params.max_level()).map(|j| digits_for_limb(params, j)).sum()
}

fn ntt(mut p: RnsPoly) -> RnsPoly {
    p.to_ntt().expect("scheme params always carry NTT tables");
    p
}

pub(crate) fn gaussian_poly<R: RngCore>(params: &SchemeParams, limbs: usize, rng: &mut R) -> RnsPoly {
    let c = gaussian_coeffs(params.n(), params.sigma(), rng).expect("sigma validated with params");
    ntt(RnsPoly::from_signed(params.ring(), &c, limbs))
}

pub(crate) fn ternary_poly<R: RngCore>(params: &SchemeParams, limbs: usize, rng: &mut R) -> RnsPoly {
    ntt(RnsPoly::from_signed(params.ring(), &ternary_coeffs(params.n(), rng), limbs))
}

/// Deterministic under `seed`.
pub fn keygen(params: &Arc<SchemeParams>, seed: u64) -> Result<KeySet> {
    let ring = params.ring();
    let full = params.max_level();
    let mut rng = rng_from_seed(seed);

    let s = ternary_poly(params, full, &mut rng);
    let a = ntt(uniform_with(ring, full, &mut rng));
    let e = gaussian_poly(params, full, &mut rng);
    let b = e.sub(&a.mul(&s)?)?;

    let s2 = s.mul(&s)?;
    let mut entries = Vec::with_capacity(relin_entry_count(params));
    for j in 0..full {
        let m = ring.moduli()[j];
        for k in 0..digits_for_limb(params, j) {
            let ak = ntt(uniform_with(ring, full, &mut rng));
            let ek = gaussian_poly(params, full, &mut rng);
            let mut bk = ek.sub(&ak.mul(&s)?)?;
            let factor = m.pow(2, RELIN_DIGIT_BITS as u64 * k as u64);
            let fs = m.shoup(factor);
            let limb = &mut bk.limbs_mut()[j];
            for (x, &y) in limb.iter_mut().zip(s2.limb(j)) {
                *x = m.add(*x, m.mul_shoup(y, factor, fs));
            }
            entries.push((bk, ak));
        }
    }

    Ok(KeySet {
        secret: SecretKey {
            params: params.clone(),
            s,
        },
        public: PublicKey {
            params: params.clone(),
            b,
            a,
        },
        relin: RelinKey {
            params: params.clone(),
            entries,
        },
    })
}

impl SecretKey {
    pub fn params(&self) -> &Arc<SchemeParams> {
        &self.params
    }

    pub(crate) fn from_poly(params: &Arc<SchemeParams>, s: RnsPoly) -> Self {
        debug_assert_eq!(s.domain(), Domain::Ntt);
        Self {
            params: params.clone(),
            s,
        }
    }
}

impl PublicKey {
    pub fn params(&self) -> &Arc<SchemeParams> {
        &self.params
    }

    pub(crate) fn from_parts(params: &Arc<SchemeParams>, b: RnsPoly, a: RnsPoly) -> Self {
        Self {
            params: params.clone(),
            b,
            a,
        }
    }
}

impl RelinKey {
    pub fn params(&self) -> &Arc<SchemeParams> {
        &self.params
    }

    pub(crate) fn from_entries(params: &Arc<SchemeParams>, entries: Vec<(RnsPoly, RnsPoly)>) -> Self {
        Self {
            params: params.clone(),
            entries,
        }
    }
}
