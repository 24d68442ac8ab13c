//! Covariance spectra and the fractional geometry they induce.
//!
//! Every point of the Hilbert space is held as its coefficients in the
//! covariance eigenbasis; the basis itself is never materialized. For a
//! spectrum `λ_1 ≥ λ_2 ≥ … > 0` the fractional inner product of order `γ` is
//!
//! ```text
//! ⟨x, y⟩_γ = Σ_i λ_i^γ x_i y_i
//! ```
//!
//! so `γ = 0` is the ambient norm and `γ = -1` the Cameron–Martin norm.

use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{check_dim, invalid, Error, Result};

/// Default truncation used by the experiment runner.
pub const DEFAULT_TRUNCATION: usize = 320;

/// Truncated, positive, nonincreasing eigenvalue sequence of a covariance operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Validates rather than sorts: reordering would desynchronize coefficient
    /// indices from mode indices.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("eigenvalues", "spectrum needs at least one mode"));
        }
        if let Some(i) = eigenvalues.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid(
                "eigenvalues",
                format!("eigenvalue {i} is {} (must be finite and > 0)", eigenvalues[i]),
            ));
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::NotSorted { index: i + 1 });
        }
        Ok(Self { eigenvalues })
    }

    /// `λ_k = (1 + (kπ)²)^{-s}` for `k = 0..d-1`: white noise viewed in `H^{-s}`
    /// with the cosine basis (constant mode first).
    pub fn white_noise(sobolev: f64, dim: usize) -> Result<Self> {
        if !(sobolev > 0.0) {
            return Err(invalid("sobolev", format!("{sobolev} must be > 0")));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be >= 1"));
        }
        Self::new(
            (0..dim)
                .map(|k| sobolev_factor(k, sobolev))
                .collect(),
        )
    }

    /// `λ_k = (kπ)^{-2} (1 + (kπ)²)^{-s}` for `k = 1..d`: the Brownian bridge
    /// covariance in the sine basis, reweighted to `H^{-s}`.
    ///
    /// The `H^{-s}` factor mirrors the white-noise construction; it is a
    /// modelling choice rather than a derived result.
    pub fn bridge(sobolev: f64, dim: usize) -> Result<Self> {
        if !(sobolev >= 0.0) {
            return Err(invalid("sobolev", format!("{sobolev} must be >= 0")));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be >= 1"));
        }
        Self::new(
            (1..=dim)
                .map(|k| {
                    let kp = k as f64 * PI;
                    sobolev_factor(k, sobolev) / (kp * kp)
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Σ_i λ_i^p` over the truncation.
    pub fn series_sum(&self, p: f64) -> f64 {
        series_sum(&self.eigenvalues, p)
    }

    /// Power-law decay exponent `q` with `λ_k ≈ C k^{-q}`, fitted on the upper
    /// half of the truncation. Used to judge whether `Σ λ_i^p` would converge
    /// without truncation (iff `p q > 1`).
    pub fn tail_decay_exponent(&self) -> f64 {
        let d = self.dim();
        if d < 4 {
            return 0.0;
        }
        let lo = d / 2;
        let (k0, k1) = (lo as f64, d as f64);
        (self.eigenvalues[lo - 1] / self.eigenvalues[d - 1]).ln() / (k1 / k0).ln()
    }

    /// Whether the untruncated series `Σ λ_i^p` plausibly converges, judged by the tail fit.
    pub fn series_converges(&self, p: f64) -> bool {
        // margin keeps a borderline fit (p q = 1 up to rounding) on the divergent side
        p * self.tail_decay_exponent() > 1.0 + 1e-9
    }
}

/// `(1 + (kπ)²)^{-s}`
pub fn sobolev_factor(k: usize, sobolev: f64) -> f64 {
    let kp = k as f64 * PI;
    (1.0 + kp * kp).powf(-sobolev)
}

pub(crate) fn series_sum(eigenvalues: &[f64], p: f64) -> f64 {
    eigenvalues.iter().map(|l| l.powf(p)).sum()
}

/// Coefficients `x_i = ⟨x, e_i⟩` of a point in the covariance eigenbasis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefVector(Vec<f64>);

impl CoefVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Unit coefficient vector for mode `i` (0-based).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sub(&self, other: &CoefVector) -> Result<CoefVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(CoefVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scaled(&self, factor: f64) -> CoefVector {
        CoefVector(self.0.iter().map(|a| a * factor).collect())
    }
}

impl Deref for CoefVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CoefVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Per-mode weights `c_i ≥ δ > 0` of a reweighted norm `Σ c_i x_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    weights: Vec<f64>,
}

impl WeightTable {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("weights", "weight table is empty"));
        }
        if let Some(i) = weights.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(invalid(
                "weights",
                format!("weight {i} is {} (must be finite and > 0)", weights[i]),
            ));
        }
        Ok(Self { weights })
    }

    pub fn uniform(dim: usize) -> Self {
        Self {
            weights: vec![1.0; dim],
        }
    }

    /// All weights one except the listed 0-based positions, which get `boost`.
    pub fn boosted(dim: usize, positions: &[usize], boost: f64) -> Result<Self> {
        let mut weights = vec![1.0; dim];
        for &p in positions {
            if p >= dim {
                return Err(invalid(
                    "positions",
                    format!("position {p} outside a {dim}-mode table"),
                ));
            }
            weights[p] = boost;
        }
        Self::new(weights)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Smallest weight; the `δ` in `c_i ≥ δ`.
    pub fn floor(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn frac_inner_raw(eigenvalues: &[f64], x: &[f64], y: &[f64], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return x.iter().zip(y).map(|(a, b)| a * b).sum();
    }
    eigenvalues
        .iter()
        .zip(x.iter().zip(y))
        .map(|(l, (a, b))| l.powf(gamma) * a * b)
        .sum()
}

/// `⟨x, y⟩_{X^γ} = Σ λ_i^γ x_i y_i`.
pub fn frac_inner(x: &CoefVector, y: &CoefVector, gamma: f64, s: &Spectrum) -> Result<f64> {
    check_dim(s.dim(), x.dim())?;
    check_dim(s.dim(), y.dim())?;
    Ok(frac_inner_raw(s.eigenvalues(), x, y, gamma))
}

/// `‖x‖_{X^γ}`.
pub fn frac_norm(x: &CoefVector, gamma: f64, s: &Spectrum) -> Result<f64> {
    Ok(frac_inner(x, x, gamma, s)?.max(0.0).sqrt())
}

/// `‖x‖_{X,c} = sqrt(Σ c_i x_i²)`.
pub fn weighted_norm(x: &CoefVector, c: &WeightTable) -> Result<f64> {
    check_dim(c.dim(), x.dim())?;
    Ok(c
        .weights()
        .iter()
        .zip(x.iter())
        .map(|(c, a)| c * a * a)
        .sum::<f64>()
        .sqrt())
}
