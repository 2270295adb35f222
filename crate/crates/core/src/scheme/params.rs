use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encoding::Encoder;
use crate::error::{Error, Result};
use crate::ring::RingParams;

pub const DEFAULT_SIGMA: f64 = 3.2;
pub const DEFAULT_N: usize = 2048;
pub const DEFAULT_SCALE_BITS: u32 = 30;
pub const BASE_PRIME_BITS: u32 = 40;
pub const RESCALE_PRIME_BITS: u32 = 30;

/// Printed by every key-generating entry point.
pub const SECURITY_DISCLAIMER: &str = "WARNING: desk-scale parameters (n = 2048, small modulus chain) are chosen for \
reproducible experiments and are NOT production-secure; no security level is claimed.";

/// Ring, encoding scale and noise width shared by keys and ciphertexts.
pub struct SchemeParams {
    ring: Arc<RingParams>,
    scale: f64,
    sigma: f64,
    hash: [u8; 32],
    encoder: Encoder,
}

impl std::fmt::Debug for SchemeParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeParams")
            .field("n", &self.ring.n())
            .field("primes", &self.ring.primes())
            .field("scale", &self.scale)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl PartialEq for SchemeParams {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
    }
}

impl SchemeParams {
    pub fn new(ring: Arc<RingParams>, scale: f64, sigma: f64) -> Result<Arc<Self>> {
        if ring.limb_count() < 2 {
            return Err(Error::InvalidParams("at least two limbs are required".into()));
        }
        if !(scale > 1.0 && scale.is_finite() && scale.log2().fract() == 0.0) {
            return Err(Error::InvalidParams(format!("scale {scale} must be a power of two > 1")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma {sigma} must be positive")));
        }
        let primes = ring.primes();
        let base = primes[0] as f64;
        let min_rescale = primes[1..].iter().copied().min().unwrap() as f64;
        if scale * scale >= base * min_rescale {
            return Err(Error::InvalidParams(format!(
                "scale 2^{} too large: a product would overflow the lowest multiplicative level",
                scale.log2()
            )));
        }
        if !ring.has_ntt_tables() {
            return Err(Error::MissingNttTables);
        }
        let hash = params_hash(ring.n(), &primes, scale, sigma);
        let encoder = Encoder::new(ring.n());
        Ok(Arc::new(Self {
            ring,
            scale,
            sigma,
            hash,
            encoder,
        }))
    }

    /// n = 2048, 40/30/30-bit chain, scale 2^30, σ = 3.2.
    pub fn desk_default() -> Arc<Self> {
        Self::with_depth(2).expect("default parameters are valid")
    }

    /// n = 2048 with a 40-bit base prime followed by `depth` 30-bit primes.
    pub fn with_depth(depth: usize) -> Result<Arc<Self>> {
        let mut bits = vec![BASE_PRIME_BITS];
        bits.extend(std::iter::repeat(RESCALE_PRIME_BITS).take(depth));
        Self::from_bits(DEFAULT_N, &bits, DEFAULT_SCALE_BITS)
    }

    pub fn from_bits(n: usize, limb_bits: &[u32], scale_bits: u32) -> Result<Arc<Self>> {
        let ring = RingParams::generate(n, limb_bits)?;
        Self::new(ring, 2f64.powi(scale_bits as i32), DEFAULT_SIGMA)
    }

    pub fn ring(&self) -> &Arc<RingParams> {
        &self.ring
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    pub fn slot_count(&self) -> usize {
        self.ring.n() / 2
    }

    pub fn max_level(&self) -> usize {
        self.ring.limb_count()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn hash(&self) -> &[u8; 32] {
        &self.hash
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    /// Prime removed when rescaling a ciphertext that sits at `level`.
    pub fn prime_at(&self, level: usize) -> u64 {
        self.ring.moduli()[level - 1].value()
    }

    pub fn to_file(&self) -> ParamsFile {
        ParamsFile {
            n: self.n(),
            moduli: self.ring.primes(),
            scale_log2: self.scale.log2() as u32,
            sigma: self.sigma,
            hash: self.hash.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    pub fn from_file(file: &ParamsFile) -> Result<Arc<Self>> {
        let ring = RingParams::new(file.n, &file.moduli)?;
        let params = Self::new(ring, 2f64.powi(file.scale_log2 as i32), file.sigma)?;
        let hex: String = params.hash.iter().map(|b| format!("{b:02x}")).collect();
        if !file.hash.is_empty() && file.hash != hex {
            return Err(Error::ParamsHashMismatch);
        }
        Ok(params)
    }
}

/// JSON form of [`SchemeParams`] (`params.json`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsFile {
    pub n: usize,
    pub moduli: Vec<u64>,
    pub scale_log2: u32,
    pub sigma: f64,
    #[serde(default)]
    pub hash: String,
}

fn params_hash(n: usize, primes: &[u64], scale: f64, sigma: f64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"hewflow-params-v1");
    h.update((n as u64).to_le_bytes());
    h.update((primes.len() as u64).to_le_bytes());
    for p in primes {
        h.update(p.to_le_bytes());
    }
    h.update(scale.to_bits().to_le_bytes());
    h.update(sigma.to_bits().to_le_bytes());
    h.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let p = SchemeParams::desk_default();
        assert_eq!(p.slot_count(), 1024);
        assert_eq!(p.max_level(), 3);
        assert_eq!(p.scale(), 2f64.powi(30));
        let primes = p.ring().primes();
        assert!(primes[0] > 1 << 39 && primes[0] < 1 << 40);
        assert!(primes[1] > 1 << 29 && primes[1] < 1 << 30);
        assert!(primes[2] > 1 << 29 && primes[2] < 1 << 30);
    }

    #[test]
    fn rejects_bad_params() {
        let ring1 = RingParams::generate(2048, &[40]).unwrap();
        assert!(SchemeParams::new(ring1, 2f64.powi(30), 3.2).is_err());
        let ring = RingParams::generate(2048, &[40, 30]).unwrap();
        assert!(SchemeParams::new(ring.clone(), 3.0, 3.2).is_err());
        assert!(SchemeParams::new(ring.clone(), 2f64.powi(36), 3.2).is_err());
        assert!(SchemeParams::new(ring.clone(), 2f64.powi(30), 0.0).is_err());
        assert!(SchemeParams::new(ring, 2f64.powi(30), 3.2).is_ok());
    }

    #[test]
    fn file_round_trip_and_hash() {
        let p = SchemeParams::desk_default();
        let file = p.to_file();
        let q = SchemeParams::from_file(&file).unwrap();
        assert_eq!(p.hash(), q.hash());
        let mut bad = file.clone();
        bad.sigma = 3.3;
        assert!(matches!(SchemeParams::from_file(&bad), Err(Error::ParamsHashMismatch)));
        let other = SchemeParams::with_depth(3).unwrap();
        assert_ne!(p.hash(), other.hash());
    }
}
