//! Gaussian measures on coefficient space.
//!
//! A measure is its mean coefficients plus the covariance eigenvalues in the
//! same basis. Sampling is the Karhunen–Loève expansion
//! `x_i = m_i + √λ_i ξ_i`, and [`GaussianMeasure::conjugate`] folds a Gaussian
//! kernel centered at `x` into the measure, which is again Gaussian.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, invalid, Result};
use crate::spectrum::{frac_inner_raw, series_sum, CoefVector, Spectrum};

/// ChaCha20 stream selected by `(seed, stream)`.
///
/// Identical pairs give identical draws on every platform; parallel work
/// should take disjoint streams via [`SeededRng::substream`].
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Stream keyed by an arbitrary tuple of indices, e.g. `(realization, task)`.
    pub fn keyed(seed: u64, key: &[u64]) -> Self {
        let stream = key.iter().fold(0x243f_6a88_85a3_08d3_u64, |acc, &k| {
            splitmix64(acc ^ splitmix64(k))
        });
        Self::new(seed, stream)
    }

    /// Independent child stream; does not advance `self`.
    pub fn substream(&self, index: u64) -> Self {
        Self::keyed(self.seed, &[self.stream, index])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `N(m, C)` with `C` diagonal in the coefficient basis.
///
/// Eigenvalues must be positive but need not be sorted: conjugate measures
/// can reorder them.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: CoefVector,
    eigenvalues: Vec<f64>,
}

/// Output of [`GaussianMeasure::support_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    /// `Σ λ_i^{2(γ+1)}`
    pub series_value: f64,
    /// `‖m‖_{X^γ}`
    pub mean_norm: f64,
}

impl GaussianMeasure {
    pub fn new(mean: CoefVector, spectrum: &Spectrum) -> Result<Self> {
        check_dim(spectrum.dim(), mean.dim())?;
        Ok(Self {
            mean,
            eigenvalues: spectrum.eigenvalues().to_vec(),
        })
    }

    pub fn centered(spectrum: &Spectrum) -> Self {
        Self {
            mean: CoefVector::zeros(spectrum.dim()),
            eigenvalues: spectrum.eigenvalues().to_vec(),
        }
    }

    /// Unsorted eigenvalues are accepted here; only positivity is checked.
    pub fn from_parts(mean: CoefVector, eigenvalues: Vec<f64>) -> Result<Self> {
        check_dim(eigenvalues.len(), mean.dim())?;
        if eigenvalues.is_empty() {
            return Err(invalid("eigenvalues", "measure needs at least one mode"));
        }
        if let Some(i) = eigenvalues.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid(
                "eigenvalues",
                format!("eigenvalue {i} is {} (must be finite and > 0)", eigenvalues[i]),
            ));
        }
        Ok(Self { mean, eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &CoefVector {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sample(&self, rng: &mut SeededRng) -> CoefVector {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        CoefVector::new(out)
    }

    /// Allocation-free [`sample`](Self::sample); `out.len()` must equal `dim()`.
    pub fn sample_into(&self, rng: &mut SeededRng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        for ((o, l), m) in out.iter_mut().zip(&self.eigenvalues).zip(self.mean.iter()) {
            *o = m + l.sqrt() * rng.standard_normal();
        }
    }

    /// The measure `η(‖y−x‖_{X^α}/ε) dμ(y)`, normalized, with `η(t) = e^{-t²}`:
    ///
    /// ```text
    /// mean_i = (ε² m_i + 2a_i x_i) / (ε² + 2a_i)
    /// eig_i  = ε² λ_i / (ε² + 2a_i),      a_i = λ_i^{α+1}
    /// ```
    pub fn conjugate(&self, x: &CoefVector, alpha: f64, eps: f64) -> Result<GaussianMeasure> {
        check_dim(self.dim(), x.dim())?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("{eps} must be finite and > 0")));
        }
        let e2 = eps * eps;
        let (mean, eigenvalues) = self
            .eigenvalues
            .iter()
            .zip(self.mean.iter().zip(x.iter()))
            .map(|(&l, (&m, &xi))| {
                let a2 = 2.0 * l.powf(alpha + 1.0);
                let den = e2 + a2;
                ((e2 * m + a2 * xi) / den, e2 * l / den)
            })
            .unzip();
        Ok(GaussianMeasure {
            mean: CoefVector::new(mean),
            eigenvalues,
        })
    }

    /// Whether samples plausibly lie in `X^γ`: reports `Σ λ_i^{2(γ+1)}` and
    /// the mean's `X^γ` norm over the truncation.
    pub fn support_diagnostic(&self, gamma: f64) -> SupportReport {
        SupportReport {
            series_value: series_sum(&self.eigenvalues, 2.0 * (gamma + 1.0)),
            mean_norm: frac_inner_raw(&self.eigenvalues, &self.mean, &self.mean, gamma)
                .max(0.0)
                .sqrt(),
        }
    }
}
