//! Continuum limits of the graph Dirichlet energy.
//!
//! Closed forms for the kernel-weighted moment series, the local limit
//! `½∫‖D u‖²_{X^{2β−α}} dμ`, the gradient and remainder terms of the
//! localization argument, and Monte Carlo estimators of the nonlocal energy
//!
//! ```text
//! E_ε(u) = ε^{-2} ∫ [∫ η(‖y−x‖_{X^α}/ε) |u(y)−u(x)|² dμ(y) / ∫ η(‖y−x‖_{X^α}/ε) dμ(y)] dμ(x)
//! ```
//!
//! The inner ratio is never estimated as a quotient of sums: it is an
//! expectation under the conjugate measure, sampled directly.

use rayon::prelude::*;

use crate::error::{check_dim, invalid, Result};
use crate::gaussian::{GaussianMeasure, SeededRng};
use crate::spectrum::{frac_inner_raw, CoefVector, Spectrum};

/// Outer samples per Monte Carlo chunk; each chunk owns one RNG substream.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// `u(x) = ⟨w, x⟩_{X^β}`
    LinearFrac,
    /// `u(x) = sin ⟨w, x⟩_{X^β}`
    BoundedSine,
}

/// Smooth test function of one projection `Z = ⟨w, x⟩_{X^β}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    kind: TestKind,
    direction: CoefVector,
    beta: f64,
    scale: f64,
}

impl TestFunction {
    pub fn new(kind: TestKind, direction: CoefVector, beta: f64) -> Result<Self> {
        if direction.is_empty() || direction.iter().all(|w| *w == 0.0) {
            return Err(invalid("direction", "test direction must be nonzero"));
        }
        if direction.iter().any(|w| !w.is_finite()) {
            return Err(invalid("direction", "test direction must be finite"));
        }
        Ok(Self {
            kind,
            direction,
            beta,
            scale: 1.0,
        })
    }

    pub fn linear(direction: CoefVector, beta: f64) -> Result<Self> {
        Self::new(TestKind::LinearFrac, direction, beta)
    }

    pub fn bounded_sine(direction: CoefVector, beta: f64) -> Result<Self> {
        Self::new(TestKind::BoundedSine, direction, beta)
    }

    /// Multiplies `u` by a constant. Scale 0 gives the zero function while
    /// keeping the direction invariant intact.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn kind(&self) -> TestKind {
        self.kind
    }

    pub fn direction(&self) -> &CoefVector {
        &self.direction
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Projection weights `c_i = λ_i^β w_i`, so that `Z = Σ c_i x_i`.
    pub fn projection(&self, eigenvalues: &[f64]) -> Vec<f64> {
        eigenvalues
            .iter()
            .zip(self.direction.iter())
            .map(|(l, w)| l.powf(self.beta) * w)
            .collect()
    }

    fn profile(&self, z: f64) -> f64 {
        match self.kind {
            TestKind::LinearFrac => self.scale * z,
            TestKind::BoundedSine => self.scale * z.sin(),
        }
    }

    fn profile_slope(&self, z: f64) -> f64 {
        match self.kind {
            TestKind::LinearFrac => self.scale,
            TestKind::BoundedSine => self.scale * z.cos(),
        }
    }

    pub fn eval(&self, x: &CoefVector, spectrum: &Spectrum) -> Result<f64> {
        check_dim(spectrum.dim(), x.dim())?;
        check_dim(spectrum.dim(), self.direction.dim())?;
        Ok(self.profile(frac_inner_raw(
            spectrum.eigenvalues(),
            &self.direction,
            x,
            self.beta,
        )))
    }

    /// `E[cos² Z]` under `μ` for the sine family, 1 for the linear one.
    fn slope_energy_factor(&self, m: &GaussianMeasure) -> f64 {
        match self.kind {
            TestKind::LinearFrac => 1.0,
            TestKind::BoundedSine => {
                let (mz, vz) = self.projection_moments(m);
                0.5 * (1.0 + (-2.0 * vz).exp() * (2.0 * mz).cos())
            }
        }
    }

    /// Mean and variance of `Z` under `μ`.
    fn projection_moments(&self, m: &GaussianMeasure) -> (f64, f64) {
        let c = self.projection(m.eigenvalues());
        let mean = c.iter().zip(m.mean().iter()).map(|(c, m)| c * m).sum();
        let var = c
            .iter()
            .zip(m.eigenvalues())
            .map(|(c, l)| c * c * l)
            .sum();
        (mean, var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub value: f64,
    /// Zero only for closed-form values.
    pub std_error: f64,
    pub n_samples: usize,
}

impl EnergyEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_samples: 0,
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Which increment the nonlocal energy integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrand {
    /// `|u(y) − u(x)|²`
    #[default]
    Difference,
    /// `⟨D u(x), y − x⟩²_{X^β}`, the first-order Taylor term
    Linearized,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid("eps", format!("{eps} must be finite and > 0")))
    }
}

/// `Σ 2λ_i^{β+1}(ε² + λ_i^{α+1}) / (ε² + 2λ_i^{α+1})²`
pub fn second_moment_series(s: &Spectrum, alpha: f64, beta: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e2 = eps * eps;
    Ok(s.eigenvalues()
        .iter()
        .map(|&l| {
            let a = l.powf(alpha + 1.0);
            let den = e2 + 2.0 * a;
            2.0 * l.powf(beta + 1.0) * (e2 + a) / (den * den)
        })
        .sum())
}

/// `S² + 2Q` with `S = Σ t_i`, `Q = Σ t_i²` and
/// `t_i = λ_i^β [ε²λ_i/(ε²+2a_i) + ε⁴λ_i/(ε²+2a_i)²]`, `a_i = λ_i^{α+1}`.
pub fn fourth_moment_bound(s: &Spectrum, alpha: f64, beta: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e2 = eps * eps;
    let (sum, sq) = s.eigenvalues().iter().fold((0.0, 0.0), |(sum, sq), &l| {
        let den = e2 + 2.0 * l.powf(alpha + 1.0);
        let t = l.powf(beta) * (e2 * l / den + e2 * e2 * l / (den * den));
        (sum + t, sq + t * t)
    });
    Ok(sum * sum + 2.0 * sq)
}

/// `½ ∫ ‖D u(x)‖²_{X^{2β−α}} dμ(x)`
pub fn local_limit(u: &TestFunction, m: &GaussianMeasure, alpha: f64) -> Result<f64> {
    check_dim(m.dim(), u.direction.dim())?;
    let beta = u.beta;
    let norm2 = frac_inner_raw(m.eigenvalues(), &u.direction, &u.direction, 2.0 * beta - alpha);
    Ok(0.5 * u.scale * u.scale * norm2 * u.slope_energy_factor(m))
}

/// `V_ε = ∫ Σ λ_i^{2β+1} A(x)_i² / (ε² + 2λ_i^{α+1}) dμ(x)` with `A(x)` the gradient coefficients.
pub fn gradient_term_v(u: &TestFunction, m: &GaussianMeasure, alpha: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    check_dim(m.dim(), u.direction.dim())?;
    let e2 = eps * eps;
    let series: f64 = m
        .eigenvalues()
        .iter()
        .zip(u.direction.iter())
        .map(|(&l, &w)| l.powf(2.0 * u.beta + 1.0) * w * w / (e2 + 2.0 * l.powf(alpha + 1.0)))
        .sum();
    Ok(u.scale * u.scale * series * u.slope_energy_factor(m))
}

/// `ε² sup‖D u‖_{X^β} √(Σ λ_i^{1+β}/(ε² + 2λ_i^{α+1})²)`
pub fn remainder_term_vi_bound(
    u: &TestFunction,
    m: &GaussianMeasure,
    alpha: f64,
    eps: f64,
) -> Result<f64> {
    check_eps(eps)?;
    check_dim(m.dim(), u.direction.dim())?;
    let e2 = eps * eps;
    let sup_grad = u.scale.abs()
        * frac_inner_raw(m.eigenvalues(), &u.direction, &u.direction, u.beta)
            .max(0.0)
            .sqrt();
    let series: f64 = m
        .eigenvalues()
        .iter()
        .map(|&l| {
            let den = e2 + 2.0 * l.powf(alpha + 1.0);
            l.powf(1.0 + u.beta) / (den * den)
        })
        .sum();
    Ok(e2 * sup_grad * series.sqrt())
}

/// Nonlocal energy in closed form.
///
/// Under `x ~ μ`, `y ~ μ_{x,ε}` the pair `(Z_x, Z_y)` is jointly Gaussian
/// with equal means, so both test families reduce to Gaussian identities.
pub fn nonlocal_energy_exact(
    u: &TestFunction,
    m: &GaussianMeasure,
    alpha: f64,
    eps: f64,
) -> Result<f64> {
    check_eps(eps)?;
    check_dim(m.dim(), u.direction.dim())?;
    let e2 = eps * eps;
    let c = u.projection(m.eigenvalues());
    let mu: f64 = c.iter().zip(m.mean().iter()).map(|(c, m)| c * m).sum();
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (&l, &ci) in m.eigenvalues().iter().zip(&c) {
        let den = e2 + 2.0 * l.powf(alpha + 1.0);
        let pull = 2.0 * l.powf(alpha + 1.0) / den;
        vx += ci * ci * l;
        vy += ci * ci * (pull * pull * l + e2 * l / den);
        cxy += ci * ci * pull * l;
    }
    let v_minus = vx + vy - 2.0 * cxy;
    let raw = match u.kind {
        TestKind::LinearFrac => v_minus,
        TestKind::BoundedSine => {
            let v_plus = vx + vy + 2.0 * cxy;
            let cos2mu = (2.0 * mu).cos();
            let sin2 = |v: f64| 0.5 * (1.0 - (-2.0 * v).exp() * cos2mu);
            let cross = 0.5 * ((-0.5 * v_minus).exp() - (-0.5 * v_plus).exp() * cos2mu);
            sin2(vx) + sin2(vy) - 2.0 * cross
        }
    };
    Ok(u.scale * u.scale * raw.max(0.0) / e2)
}

/// Per-sample integrand values `ε^{-2}·(increment)²`, one `y ~ μ_{x,ε}` per `x ~ μ`.
///
/// Deterministic in `rng`'s seed and stream for any thread count.
pub fn nonlocal_samples(
    u: &TestFunction,
    m: &GaussianMeasure,
    alpha: f64,
    eps: f64,
    n_outer: usize,
    rng: &SeededRng,
    integrand: Integrand,
) -> Result<Vec<f64>> {
    check_eps(eps)?;
    check_dim(m.dim(), u.direction.dim())?;
    let kernel = ConjugateKernel::new(m, alpha, eps);
    let c = u.projection(m.eigenvalues());
    let n_chunks = n_outer.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(n_outer - k * CHUNK);
            let mut r = rng.substream(k as u64);
            let mut x = vec![0.0; m.dim()];
            let mut y = vec![0.0; m.dim()];
            (0..len)
                .map(|_| {
                    kernel.draw_pair(m, &mut r, &mut x, &mut y);
                    increment_sq(u, &c, &x, &y, integrand) / (eps * eps)
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Monte Carlo estimate of the nonlocal energy with its standard error.
pub fn nonlocal_energy(
    u: &TestFunction,
    m: &GaussianMeasure,
    alpha: f64,
    eps: f64,
    n_outer: usize,
    rng: &SeededRng,
    integrand: Integrand,
) -> Result<EnergyEstimate> {
    if n_outer < 2 {
        return Err(invalid("n_outer", format!("{n_outer} must be >= 2")));
    }
    let samples = nonlocal_samples(u, m, alpha, eps, n_outer, rng, integrand)?;
    Ok(mean_and_error(&samples))
}

/// Monte Carlo estimate of `E f(x, y)` over `x ~ μ`, `y ~ μ_{x,ε}`.
///
/// Same chunking and streams as [`nonlocal_samples`], so results do not
/// depend on the thread count.
pub fn pair_expectation<F>(
    m: &GaussianMeasure,
    alpha: f64,
    eps: f64,
    n_outer: usize,
    rng: &SeededRng,
    f: F,
) -> Result<EnergyEstimate>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    check_eps(eps)?;
    if n_outer < 2 {
        return Err(invalid("n_outer", format!("{n_outer} must be >= 2")));
    }
    let kernel = ConjugateKernel::new(m, alpha, eps);
    let n_chunks = n_outer.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(n_outer - k * CHUNK);
            let mut r = rng.substream(k as u64);
            let mut x = vec![0.0; m.dim()];
            let mut y = vec![0.0; m.dim()];
            (0..len)
                .map(|_| {
                    kernel.draw_pair(m, &mut r, &mut x, &mut y);
                    f(&x, &y)
                })
                .collect()
        })
        .collect();
    Ok(mean_and_error(&chunks.concat()))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_error(samples: &[f64]) -> EnergyEstimate {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    EnergyEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
    }
}

fn increment_sq(u: &TestFunction, c: &[f64], x: &[f64], y: &[f64], integrand: Integrand) -> f64 {
    let zx: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
    let inc = match integrand {
        Integrand::Difference => {
            let zy: f64 = c.iter().zip(y).map(|(c, y)| c * y).sum();
            u.profile(zy) - u.profile(zx)
        }
        Integrand::Linearized => {
            let dz: f64 = c.iter().zip(x.iter().zip(y)).map(|(c, (x, y))| c * (y - x)).sum();
            u.profile_slope(zx) * dz
        }
    };
    inc * inc
}

/// Precomputed per-mode coefficients of `μ_{x,ε}` as an affine map of `x`.
struct ConjugateKernel {
    pull: Vec<f64>,
    sd: Vec<f64>,
}

impl ConjugateKernel {
    fn new(m: &GaussianMeasure, alpha: f64, eps: f64) -> Self {
        let e2 = eps * eps;
        let (pull, sd) = m
            .eigenvalues()
            .iter()
            .map(|&l| {
                let a2 = 2.0 * l.powf(alpha + 1.0);
                let den = e2 + a2;
                (a2 / den, (e2 * l / den).sqrt())
            })
            .unzip();
        Self { pull, sd }
    }

    fn draw_pair(&self, m: &GaussianMeasure, rng: &mut SeededRng, x: &mut [f64], y: &mut [f64]) {
        m.sample_into(rng, x);
        for i in 0..x.len() {
            let mean = m.mean()[i] + self.pull[i] * (x[i] - m.mean()[i]);
            y[i] = mean + self.sd[i] * rng.standard_normal();
        }
    }
}
