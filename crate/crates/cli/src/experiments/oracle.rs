//! Closed-form continuum quantities next to their Monte Carlo counterparts.

use hilbert_laplace::continuum::{
    fourth_moment_bound, gradient_term_v, local_limit, nonlocal_energy, nonlocal_energy_exact,
    pair_expectation, remainder_term_vi_bound, second_moment_series, EnergyEstimate, Integrand,
};
use hilbert_laplace::gaussian::{GaussianMeasure, SeededRng};
use hilbert_laplace::spectrum::Spectrum;

use super::convergence::test_function;
use super::TAG_ORACLE;
use crate::config::{ExperimentConfig, TestFamily};
use crate::error::CliError;
use crate::report::{fmt_f, RunReport, Table};

pub const HEADER: [&str; 7] = ["epsilon", "quantity", "dim", "closed_form", "monte_carlo", "mc_std_error", "z_score"];

fn push(t: &mut Table, eps: f64, quantity: &str, dim: usize, closed: f64, mc: Option<EnergyEstimate>) {
    let (v, se, z) = match mc {
        Some(e) => {
            let z = if e.std_error > 0.0 {
                (e.value - closed) / e.std_error
            } else {
                0.0
            };
            (fmt_f(e.value), fmt_f(e.std_error), fmt_f(z))
        }
        None => (String::new(), String::new(), String::new()),
    };
    t.push(vec![fmt_f(eps), quantity.into(), dim.to_string(), fmt_f(closed), v, se, z]);
}

/// MC of `ε^{-2} ‖y − x‖²_{X^β}` and `‖y − x‖⁴_{X^β}` over conjugate pairs.
fn moment_estimates(
    mu: &GaussianMeasure,
    alpha: f64,
    beta: f64,
    eps: f64,
    n: usize,
    rng: &SeededRng,
) -> Result<(EnergyEstimate, EnergyEstimate), CliError> {
    let weights: Vec<f64> = mu.eigenvalues().iter().map(|l| l.powf(beta)).collect();
    let sq = |x: &[f64], y: &[f64]| -> f64 {
        weights
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (a, b))| w * (b - a) * (b - a))
            .sum()
    };
    let second = pair_expectation(mu, alpha, eps, n, &rng.substream(0), |x, y| sq(x, y) / (eps * eps))?;
    let fourth = pair_expectation(mu, alpha, eps, n, &rng.substream(1), |x, y| sq(x, y).powi(2))?;
    Ok((second, fourth))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let (alpha, beta) = (cfg.oracle_alpha, cfg.oracle_beta);
    let s = Spectrum::bridge(cfg.oracle_bridge_s, cfg.oracle_dim)?;
    let mu = GaussianMeasure::centered(&s);
    let d = s.dim();
    let lin = test_function(TestFamily::Linear, &s, beta)?;
    let sine = test_function(TestFamily::Sine, &s, beta)?;
    let mut t = Table::new("oracle", &HEADER);

    // one unit mode at ε = 1: the second-moment series is 4/9
    let one = Spectrum::new(vec![1.0])?;
    let mu1 = GaussianMeasure::centered(&one);
    let rng1 = SeededRng::keyed(cfg.seed, &[TAG_ORACLE, u64::MAX]);
    let (m2, _) = moment_estimates(&mu1, 0.0, 0.0, 1.0, cfg.oracle_mc, &rng1)?;
    push(&mut t, 1.0, "second_moment_one_mode", 1, second_moment_series(&one, 0.0, 0.0, 1.0)?, Some(m2));

    let local_sine = local_limit(&sine, &mu, alpha)?;
    for (i, &eps) in cfg.oracle_eps_grid.iter().enumerate() {
        let rng = SeededRng::keyed(cfg.seed, &[TAG_ORACLE, i as u64]);
        let (m2, m4) = moment_estimates(&mu, alpha, beta, eps, cfg.oracle_mc, &rng)?;
        push(&mut t, eps, "second_moment_series", d, second_moment_series(&s, alpha, beta, eps)?, Some(m2));
        push(&mut t, eps, "fourth_moment_bound", d, fourth_moment_bound(&s, alpha, beta, eps)?, Some(m4));

        // V with the sine gradient A(x) = cos(Z) w, averaged over x ~ μ
        let c = sine.projection(mu.eigenvalues());
        let v_series = gradient_term_v(&lin, &mu, alpha, eps)?;
        let v_mc = pair_expectation(&mu, alpha, eps, cfg.oracle_mc, &rng.substream(2), |x, _| {
            let z: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
            v_series * z.cos().powi(2)
        })?;
        push(&mut t, eps, "gradient_term_v", d, gradient_term_v(&sine, &mu, alpha, eps)?, Some(v_mc));
        push(&mut t, eps, "remainder_vi_bound", d, remainder_term_vi_bound(&lin, &mu, alpha, eps)?, None);

        let ne = nonlocal_energy(&sine, &mu, alpha, eps, cfg.oracle_mc, &rng.substream(3), Integrand::Difference)?;
        push(&mut t, eps, "nonlocal_energy_sine", d, nonlocal_energy_exact(&sine, &mu, alpha, eps)?, Some(ne));
        let ne = nonlocal_energy(&lin, &mu, alpha, eps, cfg.oracle_mc, &rng.substream(4), Integrand::Difference)?;
        push(&mut t, eps, "nonlocal_energy_linear", d, nonlocal_energy_exact(&lin, &mu, alpha, eps)?, Some(ne));
        push(&mut t, eps, "local_limit_sine", d, local_sine, None);
    }
    let mut report = RunReport {
        tables: vec![t],
        ..Default::default()
    };
    report.warnings = super::convergence::summability_warnings(&s, alpha, beta);
    Ok(report)
}
