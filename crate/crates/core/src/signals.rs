//! Functions on `[0, 1]` observed on a uniform grid `t_i = i/(N−1)`.
//!
//! Generators for shifted white noise and Brownian bridges, projection onto
//! cosine or sine bases, rescaling into `H^{-s}` coordinates, and the
//! labeling rules used by the experiments.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use crate::error::{check_dim, invalid, Error, Result};
use crate::gaussian::SeededRng;
use crate::spectrum::{sobolev_factor, CoefVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("values", format!("grid needs N >= 2 points, got {}", values.len())));
        }
        Ok(Self { values })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid(n).into_iter().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Comma-separated values, 17 significant digits each.
    pub fn to_csv_row(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 24);
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s
    }
}

/// `t_i = i/(N−1)`, `i = 0..N−1`.
pub fn grid(n: usize) -> Vec<f64> {
    let h = 1.0 / (n.max(2) - 1) as f64;
    (0..n).map(|i| i as f64 * h).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    /// `{1} ∪ {√2 cos(kπt)}`, modes `k = 0..m−1`.
    CosineWithConstant,
    /// `{√2 sin(kπt)}`, modes `k = 1..m`.
    Sine,
}

impl BasisFamily {
    /// Frequency `k` of the coefficient at 0-based position `i`.
    pub fn mode(self, i: usize) -> usize {
        match self {
            BasisFamily::CosineWithConstant => i,
            BasisFamily::Sine => i + 1,
        }
    }

    pub fn eval(self, k: usize, t: f64) -> f64 {
        match self {
            BasisFamily::CosineWithConstant if k == 0 => 1.0,
            BasisFamily::CosineWithConstant => SQRT_2 * (k as f64 * PI * t).cos(),
            BasisFamily::Sine => SQRT_2 * (k as f64 * PI * t).sin(),
        }
    }
}

/// Truncated basis coefficients of a grid signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisExpansion {
    pub family: BasisFamily,
    /// 0 for raw coefficients against `e_k`.
    pub sobolev_s: f64,
    pub coeffs: Vec<f64>,
}

impl BasisExpansion {
    /// `Σ_k ā_k e_k(t_i)` on an `n`-point grid.
    pub fn reconstruct(&self, n: usize) -> Result<GridSignal> {
        let t = grid(n);
        GridSignal::new(
            t.iter()
                .map(|&t| {
                    self.coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * self.family.eval(self.family.mode(i), t))
                        .sum()
                })
                .collect(),
        )
    }
}

/// Cached `m × N` table of `e_k(t_i)/N` for repeated projections.
#[derive(Debug, Clone)]
pub struct Projector {
    family: BasisFamily,
    n_grid: usize,
    n_modes: usize,
    table: Vec<f64>,
}

impl Projector {
    /// Fails beyond the Nyquist limit `m ≤ N/2`.
    pub fn new(family: BasisFamily, n_grid: usize, n_modes: usize) -> Result<Self> {
        if n_grid < 2 {
            return Err(invalid("n_grid", format!("grid needs N >= 2 points, got {n_grid}")));
        }
        if n_modes == 0 {
            return Err(invalid("n_modes", "need at least one mode"));
        }
        let limit = n_grid / 2;
        if n_modes > limit {
            return Err(Error::Nyquist {
                requested: n_modes,
                limit,
                grid: n_grid,
            });
        }
        let t = grid(n_grid);
        let inv_n = 1.0 / n_grid as f64;
        let mut table = Vec::with_capacity(n_modes * n_grid);
        for i in 0..n_modes {
            let k = family.mode(i);
            table.extend(t.iter().map(|&t| family.eval(k, t) * inv_n));
        }
        Ok(Self {
            family,
            n_grid,
            n_modes,
            table,
        })
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `ā_k = (1/N) Σ_i x(t_i) e_k(t_i)`.
    pub fn project(&self, x: &GridSignal) -> Result<BasisExpansion> {
        check_dim(self.n_grid, x.len())?;
        let coeffs = self
            .table
            .chunks_exact(self.n_grid)
            .map(|row| row.iter().zip(x.values()).map(|(e, v)| e * v).sum())
            .collect();
        Ok(BasisExpansion {
            family: self.family,
            sobolev_s: 0.0,
            coeffs,
        })
    }
}

pub fn project_coefficients(x: &GridSignal, family: BasisFamily, m: usize) -> Result<BasisExpansion> {
    Projector::new(family, x.len(), m)?.project(x)
}

/// Coefficients against the orthonormal `H^{-s}` basis `f_k = (1+(kπ)²)^{s/2} e_k`,
/// i.e. `ā_k (1+(kπ)²)^{-s/2}`. Their plain `ℓ²` norm is the `H^{-s}` norm.
pub fn to_fractional_coords(b: &BasisExpansion, s: f64) -> CoefVector {
    CoefVector::new(
        b.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * sobolev_factor(b.family.mode(i), s / 2.0))
            .collect(),
    )
}

/// `sign + √N z_i`, with the noise multiplied by `noise_scale` (1 in experiments).
pub fn gen_shifted_white_noise_scaled(
    n: usize,
    sign: f64,
    noise_scale: f64,
    rng: &mut SeededRng,
) -> Result<GridSignal> {
    if n < 2 {
        return Err(invalid("n", format!("grid needs N >= 2 points, got {n}")));
    }
    let amp = noise_scale * (n as f64).sqrt();
    GridSignal::new((0..n).map(|_| sign + amp * rng.standard_normal()).collect())
}

pub fn gen_shifted_white_noise(n: usize, sign: f64, rng: &mut SeededRng) -> Result<GridSignal> {
    gen_shifted_white_noise_scaled(n, sign, 1.0, rng)
}

/// `B_t = W_t − t W_1` from cumulative `N(0, Δt)` increments, `Δt = 1/(N−1)`.
pub fn gen_brownian_bridge(n: usize, rng: &mut SeededRng) -> Result<GridSignal> {
    if n < 2 {
        return Err(invalid("n", format!("grid needs N >= 2 points, got {n}")));
    }
    let sd = (1.0 / (n - 1) as f64).sqrt();
    let mut w = Vec::with_capacity(n);
    w.push(0.0);
    for i in 1..n {
        w.push(w[i - 1] + sd * rng.standard_normal());
    }
    let w1 = w[n - 1];
    let t = grid(n);
    let mut b: Vec<f64> = w.iter().zip(&t).map(|(w, t)| w - t * w1).collect();
    b[n - 1] = 0.0;
    GridSignal::new(b)
}

fn strict_sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

/// `+1` iff `Σ_i x(t_i) > 0`.
pub fn label_avg(x: &GridSignal) -> i8 {
    strict_sign(x.values().iter().sum())
}

/// `+1` iff `Σ_i sin(10πt_i) x(t_i) > 0`.
pub fn label_highfreq(x: &GridSignal) -> i8 {
    let t = grid(x.len());
    strict_sign(
        t.iter()
            .zip(x.values())
            .map(|(t, v)| (10.0 * PI * t).sin() * v)
            .sum(),
    )
}

/// `√(−ln(0.5)/2)`: the level a standard bridge exceeds with probability ½.
pub fn max_threshold() -> f64 {
    (-(0.5f64).ln() / 2.0).sqrt()
}

/// `+1` iff `max_i x(t_i) > u_b`.
pub fn label_max(x: &GridSignal) -> i8 {
    let m = x.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    strict_sign(m - max_threshold())
}
