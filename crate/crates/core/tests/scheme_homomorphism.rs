//! Slotwise plaintext arithmetic is the oracle for every encrypted op.

use hewflow::scheme::{self, encode, encode_constant, encrypt, decrypt_values, keygen, KeySet, SchemeParams};
use hewflow::{format, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const VECTORS: usize = 1000;

fn setup() -> (Arc<SchemeParams>, KeySet) {
    let params = SchemeParams::desk_default();
    let keys = keygen(&params, 42).unwrap();
    (params, keys)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Error relative to the largest expected magnitude.
fn rel_err(got: &[f64], expected: &[f64]) -> f64 {
    let norm = expected.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    max_err(got, expected) / norm
}

#[test]
fn encode_decode_bound_over_1000_vectors() {
    let params = SchemeParams::desk_default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bound = params.n() as f64 / params.scale();
    let mut worst = 0.0f64;
    for _ in 0..VECTORS {
        let v = random_vec(&mut rng, 1024, 10.0);
        let pt = encode(&params, &v, params.scale(), 3).unwrap();
        worst = worst.max(max_err(&scheme::decode(&pt).unwrap(), &v));
    }
    assert!(worst < bound, "worst {worst} bound {bound}");
}

#[test]
fn encrypt_add_mul_over_1000_vectors() {
    let (params, keys) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scale = params.scale();
    let (mut e_rt, mut e_add, mut e_mulp, mut e_mul) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..VECTORS {
        let u = random_vec(&mut rng, 1024, 10.0);
        let v = random_vec(&mut rng, 1024, 10.0);
        let cu = encrypt(&keys.public, &encode(&params, &u, scale, 3).unwrap(), &mut rng).unwrap();
        let cv = encrypt(&keys.public, &encode(&params, &v, scale, 3).unwrap(), &mut rng).unwrap();
        e_rt = e_rt.max(max_err(&decrypt_values(&keys.secret, &cu).unwrap(), &u));

        let sum = scheme::add(&cu, &cv).unwrap();
        let expected: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        e_add = e_add.max(max_err(&decrypt_values(&keys.secret, &sum).unwrap(), &expected));

        let prod: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let wp = encode(&params, &v, scale, 3).unwrap();
        let mp = scheme::rescale(&scheme::mul_plain(&cu, &wp).unwrap()).unwrap();
        e_mulp = e_mulp.max(rel_err(&decrypt_values(&keys.secret, &mp).unwrap(), &prod));

        // ct x ct is the expensive op; every vector still exercises it.
        let mc = scheme::rescale(&scheme::mul(&cu, &cv, &keys.relin).unwrap()).unwrap();
        e_mul = e_mul.max(rel_err(&decrypt_values(&keys.secret, &mc).unwrap(), &prod));
        if i == 0 {
            assert_eq!(mc.level(), 2);
        }
    }
    assert!(e_rt < 1e-4, "round trip {e_rt}");
    assert!(e_add < 2e-4, "add {e_add}");
    assert!(e_mulp < 1e-3, "mul_plain {e_mulp}");
    assert!(e_mul < 1e-2, "mul_ct {e_mul}");
}

#[test]
fn fixed_examples() {
    let (params, keys) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = params.scale();

    // zero vector
    let zero = encode(&params, &[], s, 3).unwrap();
    assert!(zero.is_zero());
    let cz = encrypt(&keys.public, &zero, &mut rng).unwrap();
    assert!(decrypt_values(&keys.secret, &cz).unwrap().iter().all(|x| x.abs() < 1e-4));

    // two encryptions differ but decode the same
    let v = random_vec(&mut rng, 1024, 10.0);
    let pt = encode(&params, &v, s, 3).unwrap();
    let c1 = encrypt(&keys.public, &pt, &mut rng).unwrap();
    let c2 = encrypt(&keys.public, &pt, &mut rng).unwrap();
    assert_ne!(format::write_ciphertext(&c1), format::write_ciphertext(&c2));
    assert!(max_err(&decrypt_values(&keys.secret, &c1).unwrap(), &decrypt_values(&keys.secret, &c2).unwrap()) < 1e-4);

    // a + E(0) = a; add_plain agrees with add_ct
    let a0 = scheme::add(&c1, &cz).unwrap();
    assert!(max_err(&decrypt_values(&keys.secret, &a0).unwrap(), &v) < 1e-4);
    let w = random_vec(&mut rng, 1024, 10.0);
    let pw = encode(&params, &w, s, 3).unwrap();
    let via_plain = decrypt_values(&keys.secret, &scheme::add_plain(&c1, &pw).unwrap()).unwrap();
    let cw = encrypt(&keys.public, &pw, &mut rng).unwrap();
    let via_ct = decrypt_values(&keys.secret, &scheme::add(&c1, &cw).unwrap()).unwrap();
    assert!(max_err(&via_plain, &via_ct) < 1e-4);
    let diff = decrypt_values(&keys.secret, &scheme::sub_plain(&c1, &pw).unwrap()).unwrap();
    let expected: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
    assert!(max_err(&diff, &expected) < 2e-4);

    // constant 2.0 doubles; constant 1.0 is the identity
    let prime = params.prime_at(3) as f64;
    for (c, f) in [(2.0, 2.0), (1.0, 1.0)] {
        let k = encode_constant(&params, c, prime, 3).unwrap();
        let out = scheme::rescale(&scheme::mul_plain(&c1, &k).unwrap()).unwrap();
        assert_eq!(out.scale(), s, "scale restored exactly when P equals the dropped prime");
        let got = decrypt_values(&keys.secret, &out).unwrap();
        let exp: Vec<f64> = v.iter().map(|x| x * f).collect();
        assert!(max_err(&got, &exp) < 1e-3);
    }

    // E(v) x E(1) ~ v; square activation
    let ones = encrypt(&keys.public, &encode(&params, &[1.0; 1024], s, 3).unwrap(), &mut rng).unwrap();
    let m = scheme::rescale(&scheme::mul(&c1, &ones, &keys.relin).unwrap()).unwrap();
    assert!(rel_err(&decrypt_values(&keys.secret, &m).unwrap(), &v) < 1e-2);
    let sq = scheme::rescale(&scheme::mul(&c1, &c1, &keys.relin).unwrap()).unwrap();
    let exp: Vec<f64> = v.iter().map(|x| x * x).collect();
    assert!(rel_err(&decrypt_values(&keys.secret, &sq).unwrap(), &exp) < 1e-2);
}

#[test]
fn rescale_and_mod_switch() {
    let (params, keys) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = random_vec(&mut rng, 1024, 10.0);
    let ct = encrypt(&keys.public, &encode(&params, &v, params.scale(), 3).unwrap(), &mut rng).unwrap();

    assert_eq!(ct.size_bytes(), 98304 + format::HEADER_LEN);
    assert_eq!(format::write_ciphertext(&ct).len(), ct.size_bytes());

    // a product-scale ciphertext returns to the base scale after one rescale
    let high_scale = params.scale() * params.prime_at(3) as f64;
    let hi = encrypt(&keys.public, &encode(&params, &v, high_scale, 3).unwrap(), &mut rng).unwrap();
    let r = scheme::rescale(&hi).unwrap();
    assert_eq!(r.level(), 2);
    assert_eq!(ct.size_bytes() - r.size_bytes(), 2 * 2048 * 8);
    assert_eq!(r.size_bytes(), 65536 + format::HEADER_LEN);
    assert_eq!(format::write_ciphertext(&r).len(), r.size_bytes());
    assert_eq!(r.scale(), params.scale());
    assert!(max_err(&decrypt_values(&keys.secret, &r).unwrap(), &v) < 1e-3);

    let same = scheme::mod_switch_to(&ct, 3).unwrap();
    assert_eq!(format::write_ciphertext(&same), format::write_ciphertext(&ct));
    let low = scheme::mod_switch_to(&ct, 1).unwrap();
    assert_eq!(low.level(), 1);
    assert_eq!(low.scale(), ct.scale());
    assert!(max_err(&decrypt_values(&keys.secret, &low).unwrap(), &v) < 1e-3);
    assert!(matches!(scheme::mod_switch_to(&low, 2), Err(Error::LevelTooHigh { .. })));
    assert!(matches!(scheme::rescale(&low), Err(Error::BottomLevel)));

    // aligning levels makes an add legal
    let at2 = encrypt(&keys.public, &encode(&params, &v, params.scale(), 2).unwrap(), &mut rng).unwrap();
    assert!(matches!(scheme::add(&ct, &at2), Err(Error::LevelMismatch(3, 2))));
    let aligned = scheme::mod_switch_to(&ct, 2).unwrap();
    let sum = decrypt_values(&keys.secret, &scheme::add(&aligned, &at2).unwrap()).unwrap();
    let exp: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
    assert!(max_err(&sum, &exp) < 1e-3);

    // scale mismatch is a hard error
    assert!(matches!(scheme::add(&ct, &scheme::mul_plain(&ct, &encode_constant(&params, 1.0, 4.0, 3).unwrap()).unwrap()), Err(Error::ScaleMismatch(..))));
}

#[test]
fn depth_two_noise_stays_small() {
    let (params, keys) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = random_vec(&mut rng, 1024, 2.0);
    let ct = encrypt(&keys.public, &encode(&params, &v, params.scale(), 3).unwrap(), &mut rng).unwrap();
    let sq = scheme::rescale(&scheme::mul(&ct, &ct, &keys.relin).unwrap()).unwrap();
    let ct2 = scheme::mod_switch_to(&ct, 2).unwrap();
    let cube = scheme::rescale(&scheme::mul(&sq, &ct2, &keys.relin).unwrap()).unwrap();
    assert_eq!(cube.level(), 1);
    let exp: Vec<f64> = v.iter().map(|x| x * x * x).collect();
    assert!(max_err(&decrypt_values(&keys.secret, &cube).unwrap(), &exp) < 1e-2);
}

#[test]
fn keygen_is_deterministic() {
    let params = SchemeParams::desk_default();
    let a = keygen(&params, 11).unwrap();
    let b = keygen(&params, 11).unwrap();
    let c = keygen(&params, 12).unwrap();
    assert_eq!(format::write_secret_key(&a.secret), format::write_secret_key(&b.secret));
    assert_eq!(format::write_public_key(&a.public), format::write_public_key(&b.public));
    assert_eq!(format::write_relin_key(&a.relin), format::write_relin_key(&b.relin));
    assert_ne!(format::write_public_key(&a.public), format::write_public_key(&c.public));
}

#[test]
fn three_part_and_foreign_params_rejected() {
    let (params, keys) = setup();
    let other = SchemeParams::with_depth(3).unwrap();
    let other_keys = keygen(&other, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ct = encrypt(&keys.public, &encode(&params, &[1.0], params.scale(), 3).unwrap(), &mut rng).unwrap();
    assert!(matches!(hewflow::scheme::decrypt(&other_keys.secret, &ct), Err(Error::ParamsHashMismatch)));
    assert!(matches!(
        encrypt(&other_keys.public, &encode(&params, &[1.0], params.scale(), 3).unwrap(), &mut rng),
        Err(Error::ParamsHashMismatch)
    ));
    let bytes = format::write_ciphertext(&ct);
    assert!(matches!(format::read_ciphertext(&other, &bytes), Err(Error::ParamsHashMismatch)));
    assert!(matches!(scheme::mul_opt(&ct, &ct, None), Err(Error::MissingRelinKey)));
}
