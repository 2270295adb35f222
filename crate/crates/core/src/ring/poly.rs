use std::fmt;
use std::sync::Arc;

use super::modulus::Modulus;
use super::ntt::NttTable;
use super::primes::{is_prime, ntt_primes};
use crate::error::{Error, Result};

/// Ring degree and RNS limb chain for Z_q[x]/(x^n + 1), q = ∏ q_i.
#[derive(Debug)]
pub struct RingParams {
    n: usize,
    moduli: Vec<Modulus>,
    tables: Vec<NttTable>,
}

impl PartialEq for RingParams {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.moduli == other.moduli
    }
}

impl Eq for RingParams {}

impl RingParams {
    pub fn new(n: usize, primes: &[u64]) -> Result<Arc<Self>> {
        let params = Self::coefficient_only(n, primes)?;
        let tables = params
            .moduli
            .iter()
            .map(|&m| NttTable::new(m, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self { tables, ..params }))
    }

    /// Validated parameters without twiddle tables; NTT operations on
    /// polynomials built from these fail with [`Error::MissingNttTables`].
    pub fn coefficient_only(n: usize, primes: &[u64]) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::InvalidParams(format!(
                "ring degree {n} must be a power of two >= 8"
            )));
        }
        if primes.is_empty() {
            return Err(Error::InvalidParams("empty limb chain".into()));
        }
        for (i, &q) in primes.iter().enumerate() {
            if q >= 1 << 62 || !is_prime(q) {
                return Err(Error::InvalidParams(format!("limb {i}: {q} is not a prime below 2^62")));
            }
            if q % (2 * n as u64) != 1 {
                return Err(Error::InvalidParams(format!(
                    "limb {i}: {q} is not congruent to 1 mod {}",
                    2 * n
                )));
            }
            if primes[..i].contains(&q) {
                return Err(Error::InvalidParams(format!("limb {i}: duplicate prime {q}")));
            }
        }
        Ok(Self {
            n,
            moduli: primes.iter().map(|&q| Modulus::new(q)).collect(),
            tables: Vec::new(),
        })
    }

    /// Builds a chain from requested prime sizes in bits, e.g. `[40, 30, 30]`.
    pub fn generate(n: usize, limb_bits: &[u32]) -> Result<Arc<Self>> {
        let mut primes: Vec<u64> = Vec::with_capacity(limb_bits.len());
        for &bits in limb_bits {
            let p = ntt_primes(bits, n, 1, &primes)?;
            primes.push(p[0]);
        }
        Self::new(n, &primes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn limb_count(&self) -> usize {
        self.moduli.len()
    }

    pub fn primes(&self) -> Vec<u64> {
        self.moduli.iter().map(|m| m.value()).collect()
    }

    pub fn has_ntt_tables(&self) -> bool {
        !self.tables.is_empty()
    }

    pub(crate) fn table(&self, limb: usize) -> Result<&NttTable> {
        self.tables.get(limb).ok_or(Error::MissingNttTables)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Coeff,
    Ntt,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Coeff => "COEFF",
            Domain::Ntt => "NTT",
        }
    }
}

/// A ring element in RNS form over the first `limb_count()` primes of its
/// parameter chain.
#[derive(Clone)]
pub struct RnsPoly {
    params: Arc<RingParams>,
    limbs: Vec<Vec<u64>>,
    domain: Domain,
}

impl fmt::Debug for RnsPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RnsPoly")
            .field("n", &self.params.n)
            .field("limbs", &self.limbs.len())
            .field("domain", &self.domain)
            .finish()
    }
}

impl PartialEq for RnsPoly {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.domain == other.domain && self.limbs == other.limbs
    }
}

impl Eq for RnsPoly {}

impl RnsPoly {
    pub fn zero(params: &Arc<RingParams>, limb_count: usize, domain: Domain) -> Self {
        assert!(limb_count >= 1 && limb_count <= params.limb_count());
        Self {
            params: params.clone(),
            limbs: vec![vec![0; params.n]; limb_count],
            domain,
        }
    }

    /// Checks residue ranges and limb shapes.
    pub fn from_limbs(params: &Arc<RingParams>, limbs: Vec<Vec<u64>>, domain: Domain) -> Result<Self> {
        if limbs.is_empty() || limbs.len() > params.limb_count() {
            return Err(Error::InvalidParams(format!(
                "{} limbs for a {}-limb chain",
                limbs.len(),
                params.limb_count()
            )));
        }
        for (i, limb) in limbs.iter().enumerate() {
            if limb.len() != params.n {
                return Err(Error::InvalidParams(format!(
                    "limb {i} has {} coefficients, expected {}",
                    limb.len(),
                    params.n
                )));
            }
            let q = params.moduli[i].value();
            if let Some(j) = limb.iter().position(|&r| r >= q) {
                return Err(Error::InvalidParams(format!("limb {i} residue {j} out of range")));
            }
        }
        Ok(Self {
            params: params.clone(),
            limbs,
            domain,
        })
    }

    /// Embeds signed integer coefficients into every limb (COEFF domain).
    pub fn from_signed(params: &Arc<RingParams>, coeffs: &[i64], limb_count: usize) -> Self {
        assert_eq!(coeffs.len(), params.n);
        let limbs = params.moduli[..limb_count]
            .iter()
            .map(|m| coeffs.iter().map(|&c| m.from_i64(c)).collect())
            .collect();
        Self {
            params: params.clone(),
            limbs,
            domain: Domain::Coeff,
        }
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn limb_count(&self) -> usize {
        self.limbs.len()
    }

    pub fn limb(&self, i: usize) -> &[u64] {
        &self.limbs[i]
    }

    pub fn limbs(&self) -> &[Vec<u64>] {
        &self.limbs
    }

    pub(crate) fn limbs_mut(&mut self) -> &mut [Vec<u64>] {
        &mut self.limbs
    }

    pub fn into_limbs(self) -> Vec<Vec<u64>> {
        self.limbs
    }

    fn expect_domain(&self, expected: Domain) -> Result<()> {
        if self.domain != expected {
            return Err(Error::Domain {
                expected: expected.name(),
                found: self.domain.name(),
            });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.params, &other.params) && *self.params != *other.params {
            return Err(Error::ParamsMismatch);
        }
        if self.limbs.len() != other.limbs.len() {
            return Err(Error::LimbMismatch(self.limbs.len(), other.limbs.len()));
        }
        if self.domain != other.domain {
            return Err(Error::Domain {
                expected: self.domain.name(),
                found: other.domain.name(),
            });
        }
        Ok(())
    }

    pub fn ntt_forward(&self) -> Result<Self> {
        let mut out = self.clone();
        out.to_ntt()?;
        Ok(out)
    }

    pub fn ntt_inverse(&self) -> Result<Self> {
        let mut out = self.clone();
        out.to_coeff()?;
        Ok(out)
    }

    pub fn to_ntt(&mut self) -> Result<()> {
        self.expect_domain(Domain::Coeff)?;
        for (i, limb) in self.limbs.iter_mut().enumerate() {
            self.params.table(i)?.forward(limb);
        }
        self.domain = Domain::Ntt;
        Ok(())
    }

    pub fn to_coeff(&mut self) -> Result<()> {
        self.expect_domain(Domain::Ntt)?;
        for (i, limb) in self.limbs.iter_mut().enumerate() {
            self.params.table(i)?.inverse(limb);
        }
        self.domain = Domain::Coeff;
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Modulus, u64, u64) -> u64) -> Result<Self> {
        self.check_compatible(other)?;
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .zip(&self.params.moduli)
            .map(|((a, b), m)| a.iter().zip(b).map(|(&x, &y)| f(m, x, y)).collect())
            .collect();
        Ok(Self {
            params: self.params.clone(),
            limbs,
            domain: self.domain,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |m, x, y| m.add(x, y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |m, x, y| m.sub(x, y))
    }

    pub fn neg(&self) -> Self {
        let limbs = self
            .limbs
            .iter()
            .zip(&self.params.moduli)
            .map(|(a, m)| a.iter().map(|&x| m.neg(x)).collect())
            .collect();
        Self {
            params: self.params.clone(),
            limbs,
            domain: self.domain,
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for ((a, b), m) in self.limbs.iter_mut().zip(&other.limbs).zip(&self.params.moduli) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = m.add(*x, y);
            }
        }
        Ok(())
    }

    /// Negacyclic product; COEFF inputs are transformed internally and the
    /// result is returned in the caller's domain.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        match self.domain {
            Domain::Ntt => self.zip_with(other, |m, x, y| m.mul(x, y)),
            Domain::Coeff => {
                let a = self.ntt_forward()?;
                let b = other.ntt_forward()?;
                a.mul(&b)?.ntt_inverse()
            }
        }
    }

    /// Multiplies limb `i` by `scalars[i]`.
    pub fn mul_scalars(&self, scalars: &[u64]) -> Self {
        let limbs = self
            .limbs
            .iter()
            .zip(&self.params.moduli)
            .zip(scalars)
            .map(|((a, m), &s)| {
                let ss = m.shoup(s);
                a.iter().map(|&x| m.mul_shoup(x, s, ss)).collect()
            })
            .collect();
        Self {
            params: self.params.clone(),
            limbs,
            domain: self.domain,
        }
    }

    /// Keeps the first `limb_count` limbs. Exact: the value modulo the
    /// smaller product of primes is unchanged.
    pub fn truncate(&self, limb_count: usize) -> Result<Self> {
        if limb_count == 0 || limb_count > self.limbs.len() {
            return Err(Error::LevelTooHigh {
                target: limb_count,
                current: self.limbs.len(),
            });
        }
        Ok(Self {
            params: self.params.clone(),
            limbs: self.limbs[..limb_count].to_vec(),
            domain: self.domain,
        })
    }

    /// Divides by the last prime with rounding and removes its limb.
    ///
    /// With r the centered residue modulo q_last, (x - r) is divisible by
    /// q_last, so each remaining limb becomes (x_i - r) * q_last^{-1} mod q_i.
    pub fn drop_limb(&self) -> Result<Self> {
        let count = self.limbs.len();
        if count < 2 {
            return Err(Error::BottomLevel);
        }
        let last_idx = count - 1;
        let q_last = self.params.moduli[last_idx];
        let mut last = self.limbs[last_idx].clone();
        if self.domain == Domain::Ntt {
            self.params.table(last_idx)?.inverse(&mut last);
        }
        let centered: Vec<i64> = last.iter().map(|&r| q_last.center(r)).collect();
        let mut limbs = Vec::with_capacity(last_idx);
        for i in 0..last_idx {
            let m = self.params.moduli[i];
            let mut t: Vec<u64> = centered.iter().map(|&c| m.from_i64(c)).collect();
            if self.domain == Domain::Ntt {
                self.params.table(i)?.forward(&mut t);
            }
            let inv = m.inv(q_last.value());
            let inv_s = m.shoup(inv);
            let limb = self.limbs[i]
                .iter()
                .zip(&t)
                .map(|(&x, &y)| m.mul_shoup(m.sub(x, y), inv, inv_s))
                .collect();
            limbs.push(limb);
        }
        Ok(Self {
            params: self.params.clone(),
            limbs,
            domain: self.domain,
        })
    }

    /// Centered coefficients of a single-limb COEFF polynomial.
    pub fn centered_coeffs(&self) -> Result<Vec<i64>> {
        self.expect_domain(Domain::Coeff)?;
        let m = self.params.moduli[0];
        Ok(self.limbs[0].iter().map(|&r| m.center(r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, primes: &[u64]) -> Arc<RingParams> {
        RingParams::new(n, primes).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(RingParams::new(8, &[17]).is_ok());
        assert!(RingParams::new(6, &[17]).is_err());
        assert!(RingParams::new(4, &[17]).is_err());
        assert!(RingParams::new(8, &[19]).is_err());
        assert!(RingParams::new(8, &[21]).is_err());
        assert!(RingParams::new(8, &[17, 17]).is_err());
        assert!(RingParams::new(8, &[]).is_err());
    }

    #[test]
    fn unit_impulse_transforms_to_ones() {
        let p = params(8, &[17]);
        let delta = RnsPoly::from_signed(&p, &[1, 0, 0, 0, 0, 0, 0, 0], 1);
        let t = delta.ntt_forward().unwrap();
        assert_eq!(t.limb(0), &[1; 8]);
        assert_eq!(t.ntt_inverse().unwrap(), delta);
    }

    #[test]
    fn wrong_domain_rejected() {
        let p = params(8, &[17]);
        let a = RnsPoly::zero(&p, 1, Domain::Ntt);
        assert!(matches!(a.ntt_forward(), Err(Error::Domain { .. })));
        let b = RnsPoly::zero(&p, 1, Domain::Coeff);
        assert!(matches!(b.ntt_inverse(), Err(Error::Domain { .. })));
    }

    #[test]
    fn missing_tables_rejected() {
        let p = Arc::new(RingParams::coefficient_only(8, &[17]).unwrap());
        let a = RnsPoly::zero(&p, 1, Domain::Coeff);
        assert!(matches!(a.ntt_forward(), Err(Error::MissingNttTables)));
    }

    #[test]
    fn x4_squared_wraps_to_minus_one() {
        let p = params(8, &[97]);
        let mut c = [0i64; 8];
        c[4] = 1;
        let x4 = RnsPoly::from_signed(&p, &c, 1);
        let sq = x4.mul(&x4).unwrap();
        assert_eq!(sq.limb(0), &[96, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn mismatches_rejected() {
        let p = params(8, &[17, 97]);
        let other = params(8, &[97]);
        let a = RnsPoly::zero(&p, 2, Domain::Coeff);
        let b = RnsPoly::zero(&p, 1, Domain::Coeff);
        let c = RnsPoly::zero(&other, 1, Domain::Coeff);
        let d = RnsPoly::zero(&p, 2, Domain::Ntt);
        assert!(matches!(a.add(&b), Err(Error::LimbMismatch(2, 1))));
        assert!(matches!(b.mul(&c), Err(Error::ParamsMismatch)));
        assert!(matches!(a.sub(&d), Err(Error::Domain { .. })));
    }

    #[test]
    fn drop_limb_structure() {
        let p = RingParams::generate(16, &[40, 30, 30]).unwrap();
        let a = RnsPoly::from_signed(&p, &[5; 16], 3);
        let b = a.drop_limb().unwrap();
        assert_eq!(b.limb_count(), 2);
        let c = b.drop_limb().unwrap();
        assert!(matches!(c.drop_limb(), Err(Error::BottomLevel)));
    }

    #[test]
    fn drop_limb_rounds_division() {
        let p = params(8, &[17, 97]);
        // x = 97 * 5 + 30 -> round(x / 97) = 5; x = 97 * 3 - 40 -> 3 (centered -40).
        let coeffs = [97 * 5 + 30, 97 * 3 - 40, -97 * 2, 0, 1, -1, 48, -48];
        let a = RnsPoly::from_signed(&p, &coeffs, 2);
        for poly in [a.clone(), a.ntt_forward().unwrap()] {
            let mut out = poly.drop_limb().unwrap();
            if out.domain() == Domain::Ntt {
                out.to_coeff().unwrap();
            }
            let got = out.centered_coeffs().unwrap();
            let expected: Vec<i64> = coeffs
                .iter()
                .map(|&x| (x as f64 / 97.0).round() as i64)
                .map(|x| Modulus::new(17).center(Modulus::new(17).from_i64(x)))
                .collect();
            assert_eq!(got, expected);
        }
    }
}
