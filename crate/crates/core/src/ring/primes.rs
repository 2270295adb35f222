//! NTT-friendly prime search.

use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'outer: for a in WITNESSES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Largest primes `p < 2^bits` with `p ≡ 1 (mod 2n)`, scanning downward and
/// skipping anything listed in `exclude`.
pub fn ntt_primes(bits: u32, n: usize, count: usize, exclude: &[u64]) -> Result<Vec<u64>> {
    if !(10..=60).contains(&bits) {
        return Err(Error::InvalidParams(format!(
            "prime size {bits} bits outside [10, 60]"
        )));
    }
    let step = 2 * n as u64;
    let upper = 1u64 << bits;
    let mut candidate = (upper - 1) / step * step + 1;
    if candidate >= upper {
        candidate -= step;
    }
    let lower = 1u64 << (bits - 1);
    let mut found = Vec::with_capacity(count);
    while found.len() < count {
        if candidate < lower {
            return Err(Error::InvalidParams(format!(
                "not enough {bits}-bit primes congruent to 1 mod {step}"
            )));
        }
        if is_prime(candidate) && !exclude.contains(&candidate) {
            found.push(candidate);
        }
        candidate -= step;
    }
    Ok(found)
}

/// A generator of the order-`2n` subgroup, i.e. a primitive 2n-th root of unity.
pub fn primitive_root_2n(q: &Modulus, n: usize) -> Option<u64> {
    let order = 2 * n as u64;
    let qv = q.value();
    if (qv - 1) % order != 0 {
        return None;
    }
    let cofactor = (qv - 1) / order;
    // Smallest such root, for reproducible tables.
    let mut best: Option<u64> = None;
    for g in 2..qv.min(10_000) {
        let w = q.pow(g, cofactor);
        // Order exactly 2n iff w^n = -1.
        if q.pow(w, n as u64) == qv - 1 {
            let mut candidate = w;
            let mut power = w;
            let w2 = q.mul(w, w);
            // odd powers of w are the other primitive roots; keep the minimum
            for _ in 0..n {
                candidate = candidate.min(power);
                power = q.mul(power, w2);
            }
            best = Some(candidate);
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(1_152_921_504_606_830_593));
        assert!(!is_prime(1_152_921_504_606_830_591));
    }

    #[test]
    fn ntt_primes_are_congruent() {
        let ps = ntt_primes(30, 2048, 3, &[]).unwrap();
        assert_eq!(ps.len(), 3);
        for p in &ps {
            assert!(is_prime(*p));
            assert_eq!(p % 4096, 1);
            assert!(*p < 1 << 30 && *p > 1 << 29);
        }
        assert!(ps[0] > ps[1] && ps[1] > ps[2]);
    }

    #[test]
    fn root_has_exact_order() {
        let q = Modulus::new(17);
        let psi = primitive_root_2n(&q, 8).unwrap();
        assert_eq!(q.pow(psi, 8), 16);
        assert_eq!(q.pow(psi, 16), 1);
        assert!(primitive_root_2n(&Modulus::new(19), 8).is_none());
    }
}
