//! Polynomial stand-ins for activation functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIT_NODES: usize = 512;
pub const ERROR_GRID: usize = 1000;
pub const DEFAULT_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Square,
    Cubic,
    #[serde(alias = "sigmoid", alias = "sigmoid_approx")]
    SigmoidApprox,
    #[serde(alias = "relu", alias = "relu_approx")]
    ReluApprox,
}

impl ActivationKind {
    pub fn default_interval(self) -> (f64, f64) {
        match self {
            ActivationKind::SigmoidApprox => (-8.0, 8.0),
            ActivationKind::ReluApprox => (-4.0, 4.0),
            ActivationKind::Square | ActivationKind::Cubic => (-1.0, 1.0),
        }
    }

    pub fn target(self, x: f64) -> f64 {
        match self {
            ActivationKind::Square => x * x,
            ActivationKind::Cubic => x * x * x,
            ActivationKind::SigmoidApprox => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::ReluApprox => x.max(0.0),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, ActivationKind::Square | ActivationKind::Cubic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationPolynomial {
    pub kind: ActivationKind,
    /// Monomial coefficients c_0..c_d.
    pub coefficients: Vec<f64>,
    pub interval: (f64, f64),
    /// Max |p(x) - f(x)| over a uniform 1000-point grid on the interval.
    pub fit_error: f64,
}

impl ActivationPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Levels consumed when evaluated homomorphically.
    pub fn level_cost(&self) -> usize {
        match (self.kind, self.degree()) {
            (ActivationKind::Square, _) => 1,
            (ActivationKind::Cubic, _) => 2,
            (_, d) => (usize::BITS - d.leading_zeros()) as usize, // ceil(log2(d + 1))
        }
    }
}

/// Least-squares fit at `FIT_NODES` Chebyshev nodes; square and cubic are exact.
pub fn approximate_activation(
    kind: ActivationKind,
    degree: usize,
    interval: Option<(f64, f64)>,
) -> Result<ActivationPolynomial> {
    let (lo, hi) = interval.unwrap_or_else(|| kind.default_interval());
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidModel(format!("activation interval [{lo}, {hi}] is degenerate")));
    }
    let coefficients = match kind {
        ActivationKind::Square => vec![0.0, 0.0, 1.0],
        ActivationKind::Cubic => vec![0.0, 0.0, 0.0, 1.0],
        _ => {
            if !(1..=3).contains(&degree) {
                return Err(Error::InvalidModel(format!("activation degree {degree} not in 1..=3")));
            }
            chebyshev_least_squares(|x| kind.target(x), degree, lo, hi)
        }
    };
    let mut poly = ActivationPolynomial {
        kind,
        coefficients,
        interval: (lo, hi),
        fit_error: 0.0,
    };
    poly.fit_error = max_residual(&poly, |x| kind.target(x));
    Ok(poly)
}

pub fn max_residual(p: &ActivationPolynomial, f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = p.interval;
    (0..ERROR_GRID)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (ERROR_GRID - 1) as f64;
            (p.eval(x) - f(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Chebyshev nodes mapped to [lo, hi].
pub fn chebyshev_nodes(lo: f64, hi: f64) -> Vec<f64> {
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    (0..FIT_NODES)
        .map(|k| mid + half * (PI * (k as f64 + 0.5) / FIT_NODES as f64).cos())
        .collect()
}

/// On Chebyshev nodes the T_j are discretely orthogonal, so the
/// least-squares coefficients in that basis are plain projections.
fn chebyshev_least_squares(f: impl Fn(f64) -> f64, degree: usize, lo: f64, hi: f64) -> Vec<f64> {
    let n = FIT_NODES as f64;
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let thetas: Vec<f64> = (0..FIT_NODES).map(|k| PI * (k as f64 + 0.5) / n).collect();
    let values: Vec<f64> = thetas.iter().map(|t| f(mid + half * t.cos())).collect();
    let cheb: Vec<f64> = (0..=degree)
        .map(|j| {
            let s: f64 = thetas.iter().zip(&values).map(|(t, v)| v * (j as f64 * t).cos()).sum();
            if j == 0 {
                s / n
            } else {
                2.0 * s / n
            }
        })
        .collect();

    // Monomial form in t, via T_{j+1} = 2t T_j - T_{j-1}.
    let mut t_polys: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    while t_polys.len() <= degree {
        let j = t_polys.len();
        let mut next = vec![0.0; j + 1];
        for (i, &c) in t_polys[j - 1].iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in t_polys[j - 2].iter().enumerate() {
            next[i] -= c;
        }
        t_polys.push(next);
    }
    let mut in_t = vec![0.0; degree + 1];
    for (j, a) in cheb.iter().enumerate() {
        for (i, c) in t_polys[j].iter().enumerate() {
            in_t[i] += a * c;
        }
    }

    // Substitute t = (x - mid) / half.
    let mut in_x = vec![0.0; degree + 1];
    for (m, &b) in in_t.iter().enumerate() {
        let scale = b / half.powi(m as i32);
        for r in 0..=m {
            in_x[r] += scale * binomial(m, r) * (-mid).powi((m - r) as i32);
        }
    }
    in_x
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
