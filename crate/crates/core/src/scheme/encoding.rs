//! Canonical-embedding slot encoding.
//!
//! Slot k holds the polynomial's value at ζ_k = ψ^(2k+1) for k < n/2; the
//! remaining roots carry the complex conjugates, which keeps coefficients real.
//! Writing a_j = m_j ψ^j turns evaluation at all ζ_k into one length-n DFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Encoder {
    n: usize,
    psi: Vec<Complex64>,
    psi_inv: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Encoder {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let psi = (0..n)
            .map(|j| Complex64::from_polar(1.0, PI * j as f64 / n as f64))
            .collect::<Vec<_>>();
        let psi_inv = psi.iter().map(|z| z.conj()).collect();
        Self {
            n,
            psi,
            psi_inv,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn slot_count(&self) -> usize {
        self.n / 2
    }

    /// Real slot values -> integer-valued (rounded) coefficients at `scale`.
    pub fn encode(&self, values: &[f64], scale: f64) -> Result<Vec<f64>> {
        let slots = self.slot_count();
        if values.len() > slots {
            return Err(Error::TooManyValues {
                got: values.len(),
                slots,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParams(format!("encoding scale {scale}")));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (k, &v) in values.iter().enumerate() {
            let z = Complex64::new(v * scale, 0.0);
            buf[k] = z;
            buf[self.n - 1 - k] = z.conj();
        }
        self.forward.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        Ok(buf
            .iter()
            .zip(&self.psi_inv)
            .map(|(a, p)| ((a * p).re * inv_n).round())
            .collect())
    }

    /// Coefficients (already centered, as floats) -> slot values at `scale`.
    pub fn decode(&self, coeffs: &[f64], scale: f64) -> Result<Vec<f64>> {
        if coeffs.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "{} coefficients for ring degree {}",
                coeffs.len(),
                self.n
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParams(format!("decoding scale {scale}")));
        }
        let mut buf: Vec<Complex64> = coeffs.iter().zip(&self.psi).map(|(&m, p)| p * m).collect();
        self.inverse.process(&mut buf);
        Ok(buf[..self.slot_count()].iter().map(|z| z.re / scale).collect())
    }
}
