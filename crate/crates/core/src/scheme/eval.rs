//! Homomorphic operations. Every function checks params, level and scale
//! bookkeeping before touching residues.

use super::ciphertext::{Ciphertext, Plaintext};
use super::keys::{digits_for_limb, RelinKey, RELIN_DIGIT_BITS};
use super::params::SchemeParams;
use crate::error::{Error, Result};
use crate::ring::{Domain, RnsPoly};

/// Relative scale difference accepted by additions.
pub const SCALE_TOLERANCE: f64 = 1.0 / (1u64 << 20) as f64;

fn check_params(a: &SchemeParams, b: &SchemeParams) -> Result<()> {
    if a.hash() != b.hash() {
        return Err(Error::ParamsHashMismatch);
    }
    Ok(())
}

fn check_level(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LevelMismatch(a, b));
    }
    Ok(())
}

pub fn scales_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCALE_TOLERANCE * a.abs().max(b.abs())
}

fn check_scale(a: f64, b: f64) -> Result<()> {
    if !scales_match(a, b) {
        return Err(Error::ScaleMismatch(a, b));
    }
    Ok(())
}

fn check_two_part(ct: &Ciphertext) -> Result<()> {
    if ct.part_count() != 2 {
        return Err(Error::UnrelinearizedCiphertext(ct.part_count()));
    }
    Ok(())
}

fn check_add(a: &Ciphertext, b: &Ciphertext) -> Result<()> {
    check_params(&a.params, &b.params)?;
    check_level(a.level(), b.level())?;
    check_scale(a.scale, b.scale)
}

pub fn add(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    check_add(a, b)?;
    check_two_part(a)?;
    check_two_part(b)?;
    let parts = a.parts.iter().zip(&b.parts).map(|(x, y)| x.add(y)).collect::<Result<_>>()?;
    Ciphertext::new(&a.params, parts, a.scale)
}

pub fn sub(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    check_add(a, b)?;
    check_two_part(a)?;
    check_two_part(b)?;
    let parts = a.parts.iter().zip(&b.parts).map(|(x, y)| x.sub(y)).collect::<Result<_>>()?;
    Ciphertext::new(&a.params, parts, a.scale)
}

pub fn negate(a: &Ciphertext) -> Result<Ciphertext> {
    Ciphertext::new(&a.params, a.parts.iter().map(|p| p.neg()).collect(), a.scale)
}

fn check_plain(ct: &Ciphertext, pt: &Plaintext) -> Result<()> {
    check_params(&ct.params, &pt.params)?;
    check_level(ct.level(), pt.level())
}

pub fn add_plain(ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    check_plain(ct, pt)?;
    check_scale(ct.scale, pt.scale)?;
    let mut parts = ct.parts.clone();
    parts[0] = parts[0].add(&pt.poly)?;
    Ciphertext::new(&ct.params, parts, ct.scale)
}

pub fn sub_plain(ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    check_plain(ct, pt)?;
    check_scale(ct.scale, pt.scale)?;
    let mut parts = ct.parts.clone();
    parts[0] = parts[0].sub(&pt.poly)?;
    Ciphertext::new(&ct.params, parts, ct.scale)
}

/// Slotwise product; the result scale is ct.scale · pt.scale.
pub fn mul_plain(ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    check_plain(ct, pt)?;
    check_two_part(ct)?;
    let parts = ct.parts.iter().map(|p| p.mul(&pt.poly)).collect::<Result<_>>()?;
    Ciphertext::new(&ct.params, parts, ct.scale * pt.scale)
}

/// Σ ct_i · pt_i with lazy 128-bit accumulation: one modular reduction per
/// coefficient instead of one per product and one per add.
pub fn mul_plain_accumulate(terms: &[(&Ciphertext, &Plaintext)]) -> Result<Ciphertext> {
    let (first_ct, first_pt) = terms.first().ok_or_else(|| Error::Shape("empty accumulation".into()))?;
    let scale = first_ct.scale * first_pt.scale;
    for (ct, pt) in terms {
        check_params(&first_ct.params, &ct.params)?;
        check_plain(ct, pt)?;
        check_level(first_ct.level(), ct.level())?;
        check_two_part(ct)?;
        check_scale(scale, ct.scale * pt.scale)?;
    }
    let params = &first_ct.params;
    let ring = params.ring();
    let level = first_ct.level();
    let moduli = &ring.moduli()[..level];
    let mut parts = Vec::with_capacity(2);
    for part in 0..2 {
        let mut limbs = Vec::with_capacity(level);
        for (i, m) in moduli.iter().enumerate() {
            let limit = 1usize << (123u32.saturating_sub(2 * m.bits())).min(30);
            let mut acc = vec![0u128; params.n()];
            for (t, (ct, pt)) in terms.iter().enumerate() {
                if t > 0 && t % limit == 0 {
                    for x in acc.iter_mut() {
                        *x = m.reduce_u128(*x) as u128;
                    }
                }
                for ((a, &x), &y) in acc.iter_mut().zip(ct.parts[part].limb(i)).zip(pt.poly.limb(i)) {
                    *a += x as u128 * y as u128;
                }
            }
            limbs.push(acc.into_iter().map(|x| m.reduce_u128(x)).collect());
        }
        parts.push(RnsPoly::from_limbs(ring, limbs, Domain::Ntt)?);
    }
    Ciphertext::new(params, parts, scale)
}

/// Ciphertext product, relinearized back to two parts.
pub fn mul(a: &Ciphertext, b: &Ciphertext, rk: &RelinKey) -> Result<Ciphertext> {
    check_params(&a.params, &b.params)?;
    check_params(&a.params, &rk.params)?;
    check_level(a.level(), b.level())?;
    check_two_part(a)?;
    check_two_part(b)?;
    let (a0, a1) = (&a.parts[0], &a.parts[1]);
    let (b0, b1) = (&b.parts[0], &b.parts[1]);
    let d0 = a0.mul(b0)?;
    let d1 = a0.mul(b1)?.add(&a1.mul(b0)?)?;
    let d2 = a1.mul(b1)?;
    let (k0, k1) = key_switch(&d2, rk)?;
    Ciphertext::new(&a.params, vec![d0.add(&k0)?, d1.add(&k1)?], a.scale * b.scale)
}

/// Like [`mul`] but fails with a typed error when no key is available.
pub fn mul_opt(a: &Ciphertext, b: &Ciphertext, rk: Option<&RelinKey>) -> Result<Ciphertext> {
    mul(a, b, rk.ok_or(Error::MissingRelinKey)?)
}

/// Re-encrypts `d2 · s²` under `s`, returning the two parts to add.
fn key_switch(d2: &RnsPoly, rk: &RelinKey) -> Result<(RnsPoly, RnsPoly)> {
    let params = &rk.params;
    let ring = params.ring();
    let n = params.n();
    let level = d2.limb_count();
    let moduli = &ring.moduli()[..level];
    let coeff = d2.ntt_inverse()?;

    let mut acc0 = vec![vec![0u128; n]; level];
    let mut acc1 = vec![vec![0u128; n]; level];
    let mask = (1u64 << RELIN_DIGIT_BITS) - 1;
    // Terms that fit below 2^124 before a fold is needed.
    let limits: Vec<usize> = moduli
        .iter()
        .map(|m| 1usize << (124u32.saturating_sub(2 * m.bits())).min(30))
        .collect();
    let mut pending = 0usize;
    let mut entry = 0usize;
    for j in 0..level {
        let digits = digits_for_limb(params, j);
        for k in 0..digits {
            let shift = RELIN_DIGIT_BITS * k as u32;
            let digit: Vec<u64> = coeff.limb(j).iter().map(|&r| (r >> shift) & mask).collect();
            let (kb, ka) = &rk.entries[entry + k];
            for i in 0..level {
                // Digits are below 2^20, hence valid residues in every limb.
                let mut t = digit.clone();
                ring_table_forward(d2, i, &mut t)?;
                for (((x0, x1), &d), (&b, &a)) in acc0[i]
                    .iter_mut()
                    .zip(acc1[i].iter_mut())
                    .zip(&t)
                    .zip(kb.limb(i).iter().zip(ka.limb(i)))
                {
                    *x0 += d as u128 * b as u128;
                    *x1 += d as u128 * a as u128;
                }
            }
            pending += 1;
            if limits.iter().any(|&l| pending >= l) {
                fold(&mut acc0, moduli);
                fold(&mut acc1, moduli);
                pending = 1;
            }
        }
        entry += digits;
    }
    let finish = |acc: Vec<Vec<u128>>| -> Result<RnsPoly> {
        let limbs = acc
            .into_iter()
            .zip(moduli)
            .map(|(l, m)| l.into_iter().map(|x| m.reduce_u128(x)).collect())
            .collect();
        RnsPoly::from_limbs(ring, limbs, Domain::Ntt)
    };
    Ok((finish(acc0)?, finish(acc1)?))
}

fn fold(acc: &mut [Vec<u128>], moduli: &[crate::ring::Modulus]) {
    for (l, m) in acc.iter_mut().zip(moduli) {
        for x in l.iter_mut() {
            *x = m.reduce_u128(*x) as u128;
        }
    }
}

fn ring_table_forward(p: &RnsPoly, limb: usize, data: &mut [u64]) -> Result<()> {
    p.params().table(limb)?.forward(data);
    Ok(())
}

/// Drops the last prime, dividing the scale by it.
pub fn rescale(ct: &Ciphertext) -> Result<Ciphertext> {
    if ct.level() < 2 {
        return Err(Error::BottomLevel);
    }
    let q = ct.params.prime_at(ct.level()) as f64;
    let parts = ct.parts.iter().map(|p| p.drop_limb()).collect::<Result<_>>()?;
    Ciphertext::new(&ct.params, parts, ct.scale / q)
}

/// Exact base drop down to `target` limbs; the scale is unchanged.
pub fn mod_switch_to(ct: &Ciphertext, target: usize) -> Result<Ciphertext> {
    if target == 0 || target > ct.level() {
        return Err(Error::LevelTooHigh {
            target,
            current: ct.level(),
        });
    }
    if target == ct.level() {
        return Ok(ct.clone());
    }
    let parts = ct.parts.iter().map(|p| p.truncate(target)).collect::<Result<_>>()?;
    Ciphertext::new(&ct.params, parts, ct.scale)
}

/// Plaintext counterpart of [`mod_switch_to`].
pub fn mod_switch_plain(pt: &Plaintext, target: usize) -> Result<Plaintext> {
    Ok(Plaintext {
        params: pt.params.clone(),
        poly: pt.poly.truncate(target)?,
        scale: pt.scale,
    })
}
