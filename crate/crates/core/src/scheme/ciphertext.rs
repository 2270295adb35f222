use std::sync::Arc;

use rand::RngCore;

use super::keys::{gaussian_poly, ternary_poly, PublicKey, SecretKey};
use super::params::SchemeParams;
use crate::error::{Error, Result};
use crate::format::HEADER_LEN;
use crate::ring::{Domain, RnsPoly};

/// Encoded message; the polynomial is kept in the NTT domain.
#[derive(Clone, Debug)]
pub struct Plaintext {
    pub(crate) params: Arc<SchemeParams>,
    pub(crate) poly: RnsPoly,
    pub(crate) scale: f64,
}

/// Two (transiently three) NTT-domain parts sharing one level.
#[derive(Clone, Debug)]
pub struct Ciphertext {
    pub(crate) params: Arc<SchemeParams>,
    pub(crate) parts: Vec<RnsPoly>,
    pub(crate) scale: f64,
}

impl Plaintext {
    pub fn params(&self) -> &Arc<SchemeParams> {
        &self.params
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn level(&self) -> usize {
        self.poly.limb_count()
    }

    pub fn poly(&self) -> &RnsPoly {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.limbs().iter().all(|l| l.iter().all(|&x| x == 0))
    }
}

impl Ciphertext {
    pub(crate) fn new(params: &Arc<SchemeParams>, parts: Vec<RnsPoly>, scale: f64) -> Result<Self> {
        if !(2..=3).contains(&parts.len()) {
            return Err(Error::Format(format!("{} ciphertext parts", parts.len())));
        }
        let level = parts[0].limb_count();
        if parts.iter().any(|p| p.limb_count() != level || p.domain() != Domain::Ntt) {
            return Err(Error::Format("ciphertext parts disagree on level or domain".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Format(format!("ciphertext scale {scale}")));
        }
        Ok(Self {
            params: params.clone(),
            parts,
            scale,
        })
    }

    pub fn params(&self) -> &Arc<SchemeParams> {
        &self.params
    }

    pub fn params_hash(&self) -> &[u8; 32] {
        self.params.hash()
    }

    pub fn level(&self) -> usize {
        self.parts[0].limb_count()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[RnsPoly] {
        &self.parts
    }

    /// Exact serialized length: header + parts · level · n · 8.
    pub fn size_bytes(&self) -> usize {
        ct_size_bytes(self.parts.len(), self.level(), self.params.n())
    }
}

pub fn ct_size_bytes(parts: usize, level: usize, n: usize) -> usize {
    HEADER_LEN + parts * level * n * 8
}

fn check_level(params: &SchemeParams, level: usize) -> Result<()> {
    if level == 0 || level > params.max_level() {
        return Err(Error::LevelTooHigh {
            target: level,
            current: params.max_level(),
        });
    }
    Ok(())
}

fn poly_from_floats(params: &SchemeParams, coeffs: &[f64], level: usize) -> RnsPoly {
    let ring = params.ring();
    let limbs = ring.moduli()[..level]
        .iter()
        .map(|m| coeffs.iter().map(|&c| m.from_f64(c)).collect())
        .collect();
    let mut p = RnsPoly::from_limbs(ring, limbs, Domain::Coeff).expect("reduced residues");
    p.to_ntt().expect("NTT tables present");
    p
}

/// Slot-encodes `values` (zero padded) at `scale` with `level` limbs.
pub fn encode(params: &Arc<SchemeParams>, values: &[f64], scale: f64, level: usize) -> Result<Plaintext> {
    check_level(params, level)?;
    let coeffs = params.encoder().encode(values, scale)?;
    Ok(Plaintext {
        params: params.clone(),
        poly: poly_from_floats(params, &coeffs, level),
        scale,
    })
}

/// The same value in every slot: a constant polynomial, no transform error.
pub fn encode_constant(params: &Arc<SchemeParams>, value: f64, scale: f64, level: usize) -> Result<Plaintext> {
    check_level(params, level)?;
    if !value.is_finite() {
        return Err(Error::NonFinite(0));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParams(format!("encoding scale {scale}")));
    }
    let mut coeffs = vec![0.0; params.n()];
    coeffs[0] = (value * scale).round();
    Ok(Plaintext {
        params: params.clone(),
        poly: poly_from_floats(params, &coeffs, level),
        scale,
    })
}

/// Decodes through the centered lift modulo the base prime.
pub fn decode(pt: &Plaintext) -> Result<Vec<f64>> {
    if !(pt.scale > 0.0) {
        return Err(Error::InvalidParams("zero plaintext scale".into()));
    }
    let base = pt.poly.truncate(1)?.ntt_inverse()?;
    let coeffs: Vec<f64> = base.centered_coeffs()?.into_iter().map(|c| c as f64).collect();
    pt.params.encoder().decode(&coeffs, pt.scale)
}

fn same_params(a: &SchemeParams, b: &SchemeParams) -> Result<()> {
    if a.hash() != b.hash() {
        return Err(Error::ParamsHashMismatch);
    }
    Ok(())
}

/// Public-key encryption at the plaintext's level and scale.
pub fn encrypt<R: RngCore>(pk: &PublicKey, pt: &Plaintext, rng: &mut R) -> Result<Ciphertext> {
    same_params(&pk.params, &pt.params)?;
    let params = &pk.params;
    let level = pt.level();
    let u = ternary_poly(params, level, rng);
    let e0 = gaussian_poly(params, level, rng);
    let e1 = gaussian_poly(params, level, rng);
    let c0 = pk.b.truncate(level)?.mul(&u)?.add(&e0)?.add(&pt.poly)?;
    let c1 = pk.a.truncate(level)?.mul(&u)?.add(&e1)?;
    Ciphertext::new(params, vec![c0, c1], pt.scale)
}

pub fn decrypt(sk: &SecretKey, ct: &Ciphertext) -> Result<Plaintext> {
    same_params(&sk.params, &ct.params)?;
    if ct.parts.len() != 2 {
        return Err(Error::UnrelinearizedCiphertext(ct.parts.len()));
    }
    let s = sk.s.truncate(ct.level())?;
    let m = ct.parts[0].add(&ct.parts[1].mul(&s)?)?;
    Ok(Plaintext {
        params: ct.params.clone(),
        poly: m,
        scale: ct.scale,
    })
}

/// decode(decrypt(ct)).
pub fn decrypt_values(sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<f64>> {
    decode(&decrypt(sk, ct)?)
}
