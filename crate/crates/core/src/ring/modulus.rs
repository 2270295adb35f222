//! Word-sized modular arithmetic for primes below 2^62.

use serde::{Deserialize, Serialize};

const MASK64: u128 = u64::MAX as u128;

/// A prime modulus with a precomputed 128-bit Barrett constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "u64", into = "u64")]
pub struct Modulus {
    value: u64,
    ratio_lo: u64,
    ratio_hi: u64,
}

impl From<u64> for Modulus {
    fn from(value: u64) -> Self {
        Self::new(value)
    }
}

impl From<Modulus> for u64 {
    fn from(m: Modulus) -> u64 {
        m.value
    }
}

impl Modulus {
    /// `value` must be in `[2, 2^62)`.
    pub fn new(value: u64) -> Self {
        assert!((2..(1u64 << 62)).contains(&value), "modulus out of range");
        // floor(2^128 / q), computed as floor((2^128 - 1) / q) which agrees
        // unless q divides 2^128, impossible for odd q > 1 and fine for q = 2.
        let ratio = u128::MAX / value as u128;
        Self {
            value,
            ratio_lo: ratio as u64,
            ratio_hi: (ratio >> 64) as u64,
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bits(&self) -> u32 {
        64 - self.value.leading_zeros()
    }

    /// Reduces any `x < 2^124`.
    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let x_lo = x & MASK64;
        let x_hi = x >> 64;
        let r0 = self.ratio_lo as u128;
        let r1 = self.ratio_hi as u128;
        let lo_lo = (x_lo * r0) >> 64;
        let lo_hi = x_lo * r1;
        let hi_lo = x_hi * r0;
        let mid = lo_lo + (lo_hi & MASK64) + (hi_lo & MASK64);
        let q_hat = x_hi * r1 + (lo_hi >> 64) + (hi_lo >> 64) + (mid >> 64);
        // q_hat undershoots floor(x / q) by at most 2.
        let r = (x as u64).wrapping_sub((q_hat as u64).wrapping_mul(self.value));
        let r = if r >= 2 * self.value { r - 2 * self.value } else { r };
        self.correct(r)
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x < self.value {
            x
        } else {
            self.reduce_u128(x as u128)
        }
    }

    /// `x - q` if `x >= q`, else `x`, for `x < 2q`. Branch-free: residues
    /// are effectively random, so a branch here mispredicts half the time.
    #[inline(always)]
    fn correct(&self, x: u64) -> u64 {
        let t = x.wrapping_sub(self.value);
        t.wrapping_add(self.value & ((t as i64 >> 63) as u64))
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        self.correct(a + b)
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let t = a.wrapping_sub(b);
        t.wrapping_add(self.value & ((t as i64 >> 63) as u64))
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.value;
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse via Fermat; the modulus must be prime.
    pub fn inv(&self, a: u64) -> u64 {
        let a = self.reduce(a);
        assert!(a != 0, "zero has no inverse");
        self.pow(a, self.value - 2)
    }

    /// Maps a signed integer into `[0, q)`.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        if x >= 0 {
            self.reduce(x as u64)
        } else {
            self.neg(self.reduce(x.unsigned_abs()))
        }
    }

    /// Maps an integer-valued float of any magnitude into `[0, q)`.
    pub fn from_f64(&self, x: f64) -> u64 {
        debug_assert!(x.is_finite());
        if x.abs() < 9.0e18 {
            return self.from_i64(x as i64);
        }
        // |x| >= 2^63: x = mantissa * 2^exp exactly with a 53-bit mantissa.
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64 - 1075;
        let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        debug_assert!(exp > 0);
        let r = self.mul(self.reduce(mantissa), self.pow(2, exp as u64));
        if x < 0.0 {
            self.neg(r)
        } else {
            r
        }
    }

    /// Centered representative in `(-q/2, q/2]`.
    #[inline]
    pub fn center(&self, a: u64) -> i64 {
        if a > self.value / 2 {
            a as i64 - self.value as i64
        } else {
            a as i64
        }
    }

    /// Shoup precomputation `floor(w * 2^64 / q)` for a fixed multiplicand `w`.
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// `a * w mod q` given `w_shoup = self.shoup(w)`.
    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let q_hat = ((a as u128 * w_shoup as u128) >> 64) as u64;
        self.correct(a.wrapping_mul(w).wrapping_sub(q_hat.wrapping_mul(self.value)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PRIMES: [u64; 4] = [17, 97, 1_073_872_897, 1_152_921_504_606_830_593];

    proptest! {
        #[test]
        fn barrett_matches_native(x in any::<u128>(), idx in 0usize..4) {
            let m = Modulus::new(PRIMES[idx]);
            let x = x >> 4;
            prop_assert_eq!(m.reduce_u128(x), (x % m.value() as u128) as u64);
        }

        #[test]
        fn shoup_matches_native(a in any::<u64>(), w in any::<u64>(), idx in 0usize..4) {
            let m = Modulus::new(PRIMES[idx]);
            let (a, w) = (a % m.value(), w % m.value());
            let expected = ((a as u128 * w as u128) % m.value() as u128) as u64;
            prop_assert_eq!(m.mul_shoup(a, w, m.shoup(w)), expected);
        }

        #[test]
        fn from_f64_matches_integer(x in -(1i64 << 62)..(1i64 << 62), idx in 0usize..4) {
            let m = Modulus::new(PRIMES[idx]);
            prop_assert_eq!(m.from_f64(x as f64), m.from_i64(x as f64 as i64));
        }
    }

    #[test]
    fn from_f64_large_powers() {
        let m = Modulus::new(97);
        // 2^100 mod 97 by repeated doubling.
        let mut expected = 1u64;
        for _ in 0..100 {
            expected = expected * 2 % 97;
        }
        assert_eq!(m.from_f64(2f64.powi(100)), expected);
        assert_eq!(m.from_f64(-(2f64.powi(100))), (97 - expected) % 97);
    }

    #[test]
    fn inverse_and_center() {
        let m = Modulus::new(97);
        for a in 1..97 {
            assert_eq!(m.mul(a, m.inv(a)), 1);
        }
        assert_eq!(m.center(96), -1);
        assert_eq!(m.center(48), 48);
        assert_eq!(m.center(49), -48);
    }
}
