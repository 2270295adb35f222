//! Negacyclic NTT over Z_q[x]/(x^n + 1).
//!
//! The twist by ψ (a primitive 2n-th root of unity) is folded into the
//! twiddles, so a forward transform evaluates the input at the n odd powers
//! of ψ, in bit-reversed order. Forward is Cooley-Tukey, inverse is
//! Gentleman-Sande; both run in place.

use super::modulus::Modulus;
use super::primes::primitive_root_2n;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NttTable {
    modulus: Modulus,
    n: usize,
    log_n: u32,
    psi: u64,
    fwd: Vec<u64>,
    fwd_shoup: Vec<u64>,
    inv: Vec<u64>,
    inv_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

impl NttTable {
    pub fn new(modulus: Modulus, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParams(format!("ring degree {n} is not a power of two")));
        }
        let psi = primitive_root_2n(&modulus, n).ok_or_else(|| {
            Error::InvalidParams(format!(
                "{} is not congruent to 1 mod {}",
                modulus.value(),
                2 * n
            ))
        })?;
        let log_n = n.trailing_zeros();
        let psi_inv = modulus.inv(psi);
        let mut fwd = vec![0u64; n];
        let mut inv = vec![0u64; n];
        let (mut p, mut pi) = (1u64, 1u64);
        for i in 0..n {
            let r = bit_reverse(i, log_n);
            fwd[r] = p;
            inv[r] = pi;
            p = modulus.mul(p, psi);
            pi = modulus.mul(pi, psi_inv);
        }
        let fwd_shoup = fwd.iter().map(|&w| modulus.shoup(w)).collect();
        let inv_shoup = inv.iter().map(|&w| modulus.shoup(w)).collect();
        let n_inv = modulus.inv(n as u64);
        Ok(Self {
            modulus,
            n,
            log_n,
            psi,
            fwd,
            fwd_shoup,
            inv,
            inv_shoup,
            n_inv,
            n_inv_shoup: modulus.shoup(n_inv),
        })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn psi(&self) -> u64 {
        self.psi
    }

    /// In place; input residues in `[0, q)`, output fully reduced.
    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.modulus.value();
        let two_q = 2 * q;
        // Harvey butterflies: values stay in [0, 4q) until the final pass.
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for (i, block) in a.chunks_exact_mut(2 * t).enumerate() {
                let w = self.fwd[m + i];
                let ws = self.fwd_shoup[m + i];
                let (lo, hi) = block.split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = sub_if_ge(*x, two_q);
                    let v = mul_shoup_lazy(*y, w, ws, q);
                    *x = u + v;
                    *y = u + two_q - v;
                }
            }
            m <<= 1;
        }
        for x in a.iter_mut() {
            *x = sub_if_ge(sub_if_ge(*x, two_q), q);
        }
    }

    /// In place; input residues in `[0, q)`, output fully reduced.
    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.modulus.value();
        let two_q = 2 * q;
        // Values stay in [0, 2q).
        let mut t = 1;
        let mut m = self.n;
        for _ in 0..self.log_n {
            let h = m >> 1;
            for (i, block) in a.chunks_exact_mut(2 * t).enumerate() {
                let w = self.inv[h + i];
                let ws = self.inv_shoup[h + i];
                let (lo, hi) = block.split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = sub_if_ge(u + v, two_q);
                    *y = mul_shoup_lazy(u + two_q - v, w, ws, q);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = sub_if_ge(mul_shoup_lazy(*x, self.n_inv, self.n_inv_shoup, q), q);
        }
    }
}

#[inline(always)]
fn sub_if_ge(x: u64, bound: u64) -> u64 {
    let t = x.wrapping_sub(bound);
    t.wrapping_add(bound & ((t as i64 >> 63) as u64))
}

/// `a * w mod q` up to one extra `q`: result in `[0, 2q)` for any `a`.
#[inline(always)]
fn mul_shoup_lazy(a: u64, w: u64, w_shoup: u64, q: u64) -> u64 {
    let q_hat = ((a as u128 * w_shoup as u128) >> 64) as u64;
    a.wrapping_mul(w).wrapping_sub(q_hat.wrapping_mul(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_reverse_small() {
        assert_eq!(bit_reverse(1, 3), 4);
        assert_eq!(bit_reverse(6, 3), 3);
        assert_eq!(bit_reverse(0, 0), 0);
    }

    #[test]
    fn forward_evaluates_at_odd_powers() {
        let q = Modulus::new(97);
        let n = 16;
        let table = NttTable::new(q, n).unwrap();
        let poly: Vec<u64> = (0..n as u64).map(|i| (i * 7 + 3) % 97).collect();
        let mut a = poly.clone();
        table.forward(&mut a);
        let mut expected: Vec<u64> = (0..n)
            .map(|k| {
                let x = q.pow(table.psi(), 2 * k as u64 + 1);
                poly.iter().rev().fold(0, |acc, &c| q.add(q.mul(acc, x), c))
            })
            .collect();
        let mut got = a.clone();
        expected.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, expected);
    }
}
