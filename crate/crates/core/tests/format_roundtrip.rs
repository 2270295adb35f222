use hewflow::format::{self, BlobKind, Header, HEADER_LEN};
use hewflow::scheme::{encode, encrypt, keygen, SchemeParams};
use hewflow::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_blob_kind_round_trips_byte_identically() {
    let params = SchemeParams::desk_default();
    let keys = keygen(&params, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pt = encode(&params, &[0.5, -1.25], params.scale(), 2).unwrap();
    let ct = encrypt(&keys.public, &pt, &mut rng).unwrap();

    let b = format::write_ciphertext(&ct);
    assert_eq!(format::write_ciphertext(&format::read_ciphertext(&params, &b).unwrap()), b);
    let b = format::write_plaintext(&pt);
    assert_eq!(format::write_plaintext(&format::read_plaintext(&params, &b).unwrap()), b);
    let b = format::write_public_key(&keys.public);
    assert_eq!(format::write_public_key(&format::read_public_key(&params, &b).unwrap()), b);
    let b = format::write_secret_key(&keys.secret);
    assert_eq!(format::write_secret_key(&format::read_secret_key(&params, &b).unwrap()), b);
    let b = format::write_relin_key(&keys.relin);
    assert_eq!(format::write_relin_key(&format::read_relin_key(&params, &b).unwrap()), b);

    let many = format::write_ciphertexts(&[ct.clone(), ct.clone(), ct]);
    let back = format::read_ciphertexts(&params, &many).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(format::write_ciphertexts(&back), many);
}

#[test]
fn header_layout() {
    let params = SchemeParams::desk_default();
    let keys = keygen(&params, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ct = encrypt(&keys.public, &encode(&params, &[1.0], params.scale(), 3).unwrap(), &mut rng).unwrap();
    let bytes = format::write_ciphertext(&ct);
    assert_eq!(&bytes[..4], b"HEWF");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    assert_eq!(&bytes[6..38], params.hash());
    let h = Header::parse(&bytes).unwrap();
    assert_eq!(h.kind, BlobKind::Ciphertext);
    assert_eq!((h.level, h.parts, h.n), (3, 2, 2048));
    assert_eq!(h.scale, params.scale());
    assert_eq!(bytes.len(), HEADER_LEN + h.body_len());
    // residue 0 of part 0 limb 0
    let r = u64::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 8].try_into().unwrap());
    assert_eq!(r, ct.parts()[0].limb(0)[0]);
}

#[test]
fn malformed_input_fails_closed() {
    let params = SchemeParams::desk_default();
    let keys = keygen(&params, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ct = encrypt(&keys.public, &encode(&params, &[1.0], params.scale(), 3).unwrap(), &mut rng).unwrap();
    let bytes = format::write_ciphertext(&ct);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(format::read_ciphertext(&params, &bad), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[10] ^= 1;
    assert!(matches!(format::read_ciphertext(&params, &bad), Err(Error::ParamsHashMismatch)));
    assert!(matches!(format::read_ciphertext(&params, &bytes[..bytes.len() - 1]), Err(Error::Format(_))));
    let mut long = bytes.clone();
    long.push(0);
    assert!(format::read_ciphertext(&params, &long).is_err());
    assert!(matches!(format::read_public_key(&params, &bytes), Err(Error::Format(_))));
    let mut out_of_range = bytes.clone();
    out_of_range[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(format::read_ciphertext(&params, &out_of_range), Err(Error::Format(_))));
    let other = SchemeParams::with_depth(3).unwrap();
    assert!(matches!(format::read_ciphertext(&other, &bytes), Err(Error::ParamsHashMismatch)));
}
