//! Ring arithmetic against independent integer oracles.

use hewflow::ring::{Domain, Modulus, RingParams, RnsPoly};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n^2) negacyclic convolution over i128, reduced at the end.
fn schoolbook(a: &[i64], b: &[i64], q: i128) -> Vec<i64> {
    let n = a.len();
    let mut acc = vec![0i128; n];
    for i in 0..n {
        for j in 0..n {
            let prod = a[i] as i128 * b[j] as i128;
            let k = i + j;
            if k < n {
                acc[k] += prod;
            } else {
                acc[k - n] -= prod;
            }
        }
    }
    acc.into_iter().map(|x| x.rem_euclid(q) as i64).collect()
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, q: u64) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(0..q) as i64).collect()
}

#[test]
fn poly_mul_matches_schoolbook_200_pairs() {
    for (n, q) in [(8usize, 97u64), (16, 97), (32, 193)] {
        let params = RingParams::new(n, &[q]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..200 {
            let a = random_poly(&mut rng, n, q);
            let b = random_poly(&mut rng, n, q);
            let pa = RnsPoly::from_signed(&params, &a, 1);
            let pb = RnsPoly::from_signed(&params, &b, 1);
            let got = pa.mul(&pb).unwrap();
            let expected = schoolbook(&a, &b, q as i128);
            let got: Vec<i64> = got.limb(0).iter().map(|&x| x as i64).collect();
            assert_eq!(got, expected, "n={n} q={q}");
        }
    }
}

#[test]
fn pointwise_transform_product_is_convolution() {
    let params = RingParams::new(8, &[97]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_poly(&mut rng, 8, 97);
    let b = random_poly(&mut rng, 8, 97);
    let ta = RnsPoly::from_signed(&params, &a, 1).ntt_forward().unwrap();
    let tb = RnsPoly::from_signed(&params, &b, 1).ntt_forward().unwrap();
    let prod = ta.mul(&tb).unwrap();
    assert_eq!(prod.domain(), Domain::Ntt);
    let expected = RnsPoly::from_signed(&params, &schoolbook(&a, &b, 97), 1)
        .ntt_forward()
        .unwrap();
    assert_eq!(prod, expected);
}

#[test]
fn round_trip_n16_exhaustive_equality() {
    let params = RingParams::new(16, &[97]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let a = RnsPoly::from_signed(&params, &random_poly(&mut rng, 16, 97), 1);
        assert_eq!(a.ntt_forward().unwrap().ntt_inverse().unwrap(), a);
        let t = RnsPoly::from_limbs(&params, vec![a.limb(0).to_vec()], Domain::Ntt).unwrap();
        assert_eq!(t.ntt_inverse().unwrap().ntt_forward().unwrap(), t);
    }
}

#[test]
fn identities() {
    let params = RingParams::generate(64, &[40, 30]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = hewflow::ring::uniform_with(&params, 2, &mut rng);
    let mut one = vec![0i64; 64];
    one[0] = 1;
    let one = RnsPoly::from_signed(&params, &one, 2);
    let zero = RnsPoly::zero(&params, 2, Domain::Coeff);
    assert_eq!(a.mul(&one).unwrap(), a);
    assert_eq!(a.add(&zero).unwrap(), a);
    assert_eq!(a.sub(&a).unwrap(), zero);
    assert_eq!(a.add(&a.neg()).unwrap(), zero);
}

/// CRT reconstruction for two small primes, test-only.
fn crt2(r0: u64, r1: u64, q0: u64, q1: u64) -> i128 {
    let m1 = Modulus::new(q1);
    let inv = m1.inv(q0 % q1);
    // x = r0 + q0 * ((r1 - r0) * q0^{-1} mod q1)
    let t = m1.mul(m1.sub(r1 % q1, r0 % q1), inv);
    r0 as i128 + q0 as i128 * t as i128
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rns_consistency_with_integer_oracle(seed in any::<u64>()) {
        // Two primes below 2^20 with q = 1 mod 16.
        let primes = hewflow::ring::ntt_primes(20, 8, 2, &[]).unwrap();
        let (q0, q1) = (primes[0], primes[1]);
        let params = RingParams::new(8, &[q0, q1]).unwrap();
        let q = q0 as i128 * q1 as i128;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<i64> = (0..8).map(|_| rng.gen_range(0..q as i64)).collect();
        let b: Vec<i64> = (0..8).map(|_| rng.gen_range(0..q as i64)).collect();
        let pa = RnsPoly::from_signed(&params, &a, 2);
        let pb = RnsPoly::from_signed(&params, &b, 2);
        let sum = pa.add(&pb).unwrap();
        let prod = pa.mul(&pb).unwrap();
        let expected_prod = {
            let mut acc = vec![0i128; 8];
            for i in 0..8 {
                for j in 0..8 {
                    let p = (a[i] as i128 * b[j] as i128) % q;
                    if i + j < 8 { acc[i + j] += p } else { acc[i + j - 8] -= p }
                }
            }
            acc.into_iter().map(|x| x.rem_euclid(q)).collect::<Vec<_>>()
        };
        for k in 0..8 {
            prop_assert_eq!(crt2(sum.limb(0)[k], sum.limb(1)[k], q0, q1), (a[k] as i128 + b[k] as i128) % q);
            prop_assert_eq!(crt2(prod.limb(0)[k], prod.limb(1)[k], q0, q1), expected_prod[k]);
        }
    }

    #[test]
    fn add_sub_inverse(seed in any::<u64>()) {
        let params = RingParams::generate(32, &[40, 30, 30]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = hewflow::ring::uniform_with(&params, 3, &mut rng);
        let b = hewflow::ring::uniform_with(&params, 3, &mut rng);
        prop_assert_eq!(a.add(&b).unwrap().sub(&b).unwrap(), a);
    }

    #[test]
    fn ring_relation_x_to_k(k in 8usize..16, seed in any::<u64>()) {
        let n = 8;
        let params = RingParams::new(n, &[97]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = RnsPoly::from_signed(&params, &random_poly(&mut rng, n, 97), 1);
        // x^k computed by repeated multiplication by x
        let mut x = vec![0i64; n];
        x[1] = 1;
        let x = RnsPoly::from_signed(&params, &x, 1);
        let mut xk = RnsPoly::from_signed(&params, &{ let mut one = vec![0i64; n]; one[0] = 1; one }, 1);
        for _ in 0..k { xk = xk.mul(&x).unwrap(); }
        let mut shifted = vec![0i64; n];
        shifted[k - n] = -1;
        let minus_x = RnsPoly::from_signed(&params, &shifted, 1);
        prop_assert_eq!(a.mul(&xk).unwrap(), a.mul(&minus_x).unwrap());
    }
}
