//! HEWF binary format for keys, plaintexts and ciphertexts.
//!
//! ```text
//! offset size field
//!  0     4    magic "HEWF"
//!  4     2    version (u16 LE)
//!  6     32   SHA-256 params hash
//! 38     1    kind
//! 39     1    level (limbs per part)
//! 40     1    parts
//! 41     4    n (u32 LE)
//! 45     8    scale (f64 bits LE)
//! 53     ...  residues, u64 LE, ordered (part, limb, coefficient)
//! ```
//!
//! All polynomials are stored in the NTT domain. Files may hold several
//! blobs back to back.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::{Domain, RnsPoly};
use crate::scheme::{
    digits_for_limb, relin_entry_count, Ciphertext, Plaintext, PublicKey, RelinKey, SchemeParams, SecretKey,
};

pub const MAGIC: &[u8; 4] = b"HEWF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 53;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum BlobKind {
    Ciphertext = 1,
    PublicKey = 2,
    SecretKey = 3,
    RelinKey = 4,
    Plaintext = 5,
}

impl BlobKind {
    fn from_u8(b: u8) -> Result<Self> {
        Ok(match b {
            1 => Self::Ciphertext,
            2 => Self::PublicKey,
            3 => Self::SecretKey,
            4 => Self::RelinKey,
            5 => Self::Plaintext,
            _ => return Err(Error::Format(format!("unknown blob kind {b}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub version: u16,
    pub params_hash: [u8; 32],
    pub kind: BlobKind,
    pub level: usize,
    pub parts: usize,
    pub n: usize,
    pub scale: f64,
}

impl Header {
    pub fn body_len(&self) -> usize {
        self.parts * self.level * self.n * 8
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.params_hash);
        out.push(self.kind as u8);
        out.push(self.level as u8);
        out.push(self.parts as u8);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.scale.to_bits().to_le_bytes());
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("{} bytes is shorter than a header", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut params_hash = [0u8; 32];
        params_hash.copy_from_slice(&bytes[6..38]);
        Ok(Self {
            version,
            params_hash,
            kind: BlobKind::from_u8(bytes[38])?,
            level: bytes[39] as usize,
            parts: bytes[40] as usize,
            n: u32::from_le_bytes(bytes[41..45].try_into().unwrap()) as usize,
            scale: f64::from_bits(u64::from_le_bytes(bytes[45..53].try_into().unwrap())),
        })
    }
}

fn write_blob(params: &SchemeParams, kind: BlobKind, scale: f64, polys: &[&RnsPoly]) -> Vec<u8> {
    let level = polys[0].limb_count();
    let header = Header {
        version: VERSION,
        params_hash: *params.hash(),
        kind,
        level,
        parts: polys.len(),
        n: params.n(),
        scale,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + header.body_len());
    header.write(&mut out);
    for p in polys {
        debug_assert_eq!(p.domain(), Domain::Ntt);
        for limb in p.limbs() {
            for &r in limb {
                out.extend_from_slice(&r.to_le_bytes());
            }
        }
    }
    out
}

/// Parses one blob from the front of `bytes`; returns it and the bytes used.
fn read_blob(params: &Arc<SchemeParams>, bytes: &[u8], kind: BlobKind) -> Result<(Header, Vec<RnsPoly>, usize)> {
    let header = Header::parse(bytes)?;
    if header.params_hash != *params.hash() {
        return Err(Error::ParamsHashMismatch);
    }
    if header.kind != kind {
        return Err(Error::Format(format!("expected {:?} blob, found {:?}", kind, header.kind)));
    }
    if header.n != params.n() {
        return Err(Error::Format(format!("ring degree {} does not match params", header.n)));
    }
    if header.level == 0 || header.level > params.max_level() || header.parts == 0 {
        return Err(Error::Format(format!("level {} / parts {}", header.level, header.parts)));
    }
    let total = HEADER_LEN + header.body_len();
    if bytes.len() < total {
        return Err(Error::Format(format!("truncated blob: {} of {} bytes", bytes.len(), total)));
    }
    let mut words = bytes[HEADER_LEN..total]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()));
    let mut polys = Vec::with_capacity(header.parts);
    for _ in 0..header.parts {
        let limbs = (0..header.level)
            .map(|_| words.by_ref().take(header.n).collect::<Vec<_>>())
            .collect();
        polys.push(RnsPoly::from_limbs(params.ring(), limbs, Domain::Ntt).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok((header, polys, total))
}

fn read_exact(params: &Arc<SchemeParams>, bytes: &[u8], kind: BlobKind) -> Result<(Header, Vec<RnsPoly>)> {
    let (h, p, used) = read_blob(params, bytes, kind)?;
    if used != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - used)));
    }
    Ok((h, p))
}

pub fn write_ciphertext(ct: &Ciphertext) -> Vec<u8> {
    let polys: Vec<&RnsPoly> = ct.parts().iter().collect();
    write_blob(ct.params(), BlobKind::Ciphertext, ct.scale(), &polys)
}

pub fn read_ciphertext(params: &Arc<SchemeParams>, bytes: &[u8]) -> Result<Ciphertext> {
    let (h, polys) = read_exact(params, bytes, BlobKind::Ciphertext)?;
    Ciphertext::new(params, polys, h.scale)
}

pub fn write_ciphertexts(cts: &[Ciphertext]) -> Vec<u8> {
    cts.iter().flat_map(write_ciphertext).collect()
}

pub fn read_ciphertexts(params: &Arc<SchemeParams>, mut bytes: &[u8]) -> Result<Vec<Ciphertext>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (h, polys, used) = read_blob(params, bytes, BlobKind::Ciphertext)?;
        out.push(Ciphertext::new(params, polys, h.scale)?);
        bytes = &bytes[used..];
    }
    Ok(out)
}

pub fn write_plaintext(pt: &Plaintext) -> Vec<u8> {
    write_blob(pt.params(), BlobKind::Plaintext, pt.scale(), &[pt.poly()])
}

pub fn read_plaintext(params: &Arc<SchemeParams>, bytes: &[u8]) -> Result<Plaintext> {
    let (h, mut polys) = read_exact(params, bytes, BlobKind::Plaintext)?;
    if polys.len() != 1 {
        return Err(Error::Format("plaintext must have one part".into()));
    }
    Ok(Plaintext {
        params: params.clone(),
        poly: polys.pop().unwrap(),
        scale: h.scale,
    })
}

pub fn write_public_key(pk: &PublicKey) -> Vec<u8> {
    write_blob(pk.params(), BlobKind::PublicKey, 1.0, &[&pk.b, &pk.a])
}

pub fn read_public_key(params: &Arc<SchemeParams>, bytes: &[u8]) -> Result<PublicKey> {
    let (h, mut polys) = read_exact(params, bytes, BlobKind::PublicKey)?;
    if polys.len() != 2 || h.level != params.max_level() {
        return Err(Error::Format("public key must have two full-level parts".into()));
    }
    let a = polys.pop().unwrap();
    let b = polys.pop().unwrap();
    Ok(PublicKey::from_parts(params, b, a))
}

pub fn write_secret_key(sk: &SecretKey) -> Vec<u8> {
    write_blob(sk.params(), BlobKind::SecretKey, 1.0, &[&sk.s])
}

pub fn read_secret_key(params: &Arc<SchemeParams>, bytes: &[u8]) -> Result<SecretKey> {
    let (h, mut polys) = read_exact(params, bytes, BlobKind::SecretKey)?;
    if polys.len() != 1 || h.level != params.max_level() {
        return Err(Error::Format("secret key must have one full-level part".into()));
    }
    Ok(SecretKey::from_poly(params, polys.pop().unwrap()))
}

/// Entries in (limb, digit) order, each as (b, a).
pub fn write_relin_key(rk: &RelinKey) -> Vec<u8> {
    let polys: Vec<&RnsPoly> = rk.entries.iter().flat_map(|(b, a)| [b, a]).collect();
    write_blob(rk.params(), BlobKind::RelinKey, 1.0, &polys)
}

pub fn read_relin_key(params: &Arc<SchemeParams>, bytes: &[u8]) -> Result<RelinKey> {
    let (h, polys) = read_exact(params, bytes, BlobKind::RelinKey)?;
    let expected = 2 * relin_entry_count(params);
    if polys.len() != expected || h.level != params.max_level() {
        return Err(Error::Format(format!(
            "relinearization key has {} parts, expected {expected} (digits per limb: {:?})",
            polys.len(),
            (0..params.max_level()).map(|j| digits_for_limb(params, j)).collect::<Vec<_>>()
        )));
    }
    let mut it = polys.into_iter();
    let mut entries = Vec::with_capacity(expected / 2);
    while let (Some(b), Some(a)) = (it.next(), it.next()) {
        entries.push((b, a));
    }
    Ok(RelinKey::from_entries(params, entries))
}
