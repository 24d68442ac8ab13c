//! Discrete → nonlocal → local convergence on a truncated bridge measure.
//!
//! Sweep over `n` at fixed ε compares the graph energy of sampled points with
//! the closed-form nonlocal energy. Sweep over ε compares the nonlocal energy
//! with its local limit.

use hilbert_laplace::continuum::{
    gradient_term_v, local_limit, nonlocal_energy, nonlocal_energy_exact, remainder_term_vi_bound,
    Integrand, TestFunction,
};
use hilbert_laplace::gaussian::{GaussianMeasure, SeededRng};
use hilbert_laplace::graph::{dirichlet_energy, pairwise_distances, weight_matrix, NormSpec, Point};
use hilbert_laplace::spectrum::{CoefVector, Spectrum};
use rayon::prelude::*;

use super::TAG_CONVERGENCE;
use crate::config::{ExperimentConfig, TestFamily};
use crate::error::CliError;
use crate::report::{fmt_f, RunReport, Table};

/// `w_i ∝ √λ_i`, scaled so that `Var ⟨w, x⟩_{X^β} = 1` under the centered measure.
pub fn default_direction(s: &Spectrum, beta: f64) -> CoefVector {
    let raw: Vec<f64> = s.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let var: f64 = s
        .eigenvalues()
        .iter()
        .zip(&raw)
        .map(|(l, w)| l.powf(2.0 * beta + 1.0) * w * w)
        .sum();
    CoefVector::new(raw.iter().map(|w| w / var.sqrt()).collect())
}

pub fn test_function(family: TestFamily, s: &Spectrum, beta: f64) -> Result<TestFunction, CliError> {
    let w = default_direction(s, beta);
    Ok(match family {
        TestFamily::Linear => TestFunction::linear(w, beta)?,
        TestFamily::Sine => TestFunction::bounded_sine(w, beta)?,
    })
}

/// Truncated-series stand-ins for the summability hypotheses, flagged when the
/// fitted tail says the full series diverges.
pub fn summability_warnings(s: &Spectrum, alpha: f64, beta: f64) -> Vec<String> {
    let checks = [
        ("sum lambda^(beta+1/2-alpha/2)", beta + 0.5 - alpha / 2.0),
        ("sum lambda^(alpha+1)", alpha + 1.0),
        ("sum lambda^(2(alpha+1))", 2.0 * (alpha + 1.0)),
    ];
    checks
        .iter()
        .filter(|(_, p)| !s.series_converges(*p))
        .map(|(name, p)| {
            format!(
                "{name} = {:.6e} over {} modes, but the fitted decay exponent {:.3} suggests the full series diverges (power {p})",
                s.series_sum(*p),
                s.dim(),
                s.tail_decay_exponent()
            )
        })
        .collect()
}

/// Graph energy of `u` on `n` fresh samples from `mu`.
pub fn discrete_energy(
    u: &TestFunction,
    s: &Spectrum,
    mu: &GaussianMeasure,
    alpha: f64,
    eps: f64,
    n: usize,
    kernel: hilbert_laplace::graph::KernelScale,
    rng: &mut SeededRng,
) -> Result<f64, CliError> {
    let xs: Vec<CoefVector> = (0..n).map(|_| mu.sample(rng)).collect();
    let values: Vec<f64> = xs.iter().map(|x| u.eval(x, s)).collect::<Result<_, _>>()?;
    let points: Vec<Point> = xs.into_iter().map(Point::Coef).collect();
    let d = pairwise_distances(
        &points,
        &NormSpec::Fractional {
            gamma: alpha,
            spectrum: s.clone(),
        },
    )?;
    let g = weight_matrix(&d, eps, kernel)?;
    Ok(dirichlet_energy(&g, &values)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let (alpha, beta) = (cfg.conv_alpha, cfg.conv_beta);
    let s = Spectrum::bridge(cfg.conv_bridge_s, cfg.conv_dim)?;
    let mu = GaussianMeasure::centered(&s);
    let mut report = RunReport::default();
    for w in summability_warnings(&s, alpha, beta) {
        log::warn!("{w}");
        report.warnings.push(w);
    }

    let u = test_function(cfg.conv_test, &s, beta)?;
    let exact = nonlocal_energy_exact(&u, &mu, alpha, cfg.conv_eps)?;
    let mc = nonlocal_energy(
        &u,
        &mu,
        alpha,
        cfg.conv_eps,
        cfg.conv_mc,
        &SeededRng::keyed(cfg.seed, &[TAG_CONVERGENCE, 0]),
        Integrand::Difference,
    )?;
    let jobs: Vec<(usize, usize)> = cfg
        .conv_n
        .iter()
        .flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r)))
        .collect();
    let energies: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let mut rng = SeededRng::keyed(cfg.seed, &[TAG_CONVERGENCE, 1, n as u64, r as u64]);
            discrete_energy(&u, &s, &mu, alpha, cfg.conv_eps, n, cfg.kernel_scale, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let mut sweep = Table::new(
        "convergence_n_sweep",
        &["n", "realization", "epsilon", "discrete", "nonlocal_exact", "gap"],
    );
    for (&(n, r), &e) in jobs.iter().zip(&energies) {
        sweep.push(vec![
            n.to_string(),
            r.to_string(),
            fmt_f(cfg.conv_eps),
            fmt_f(e),
            fmt_f(exact),
            fmt_f((e - exact).abs()),
        ]);
    }
    let mut n_summary = Table::new(
        "convergence_n_summary",
        &["n", "realizations", "mean_discrete", "mean_gap", "nonlocal_exact", "nonlocal_mc", "nonlocal_mc_se"],
    );
    for &n in &cfg.conv_n {
        let es: Vec<f64> = jobs
            .iter()
            .zip(&energies)
            .filter(|((m, _), _)| *m == n)
            .map(|(_, e)| *e)
            .collect();
        let k = es.len() as f64;
        n_summary.push(vec![
            n.to_string(),
            es.len().to_string(),
            fmt_f(es.iter().sum::<f64>() / k),
            fmt_f(es.iter().map(|e| (e - exact).abs()).sum::<f64>() / k),
            fmt_f(exact),
            fmt_f(mc.value),
            fmt_f(mc.std_error),
        ]);
    }

    let v = test_function(cfg.conv_sweep_test, &s, beta)?;
    let local = local_limit(&v, &mu, alpha)?;
    let mut eps_sweep = Table::new(
        "convergence_eps_sweep",
        &[
            "epsilon",
            "local_limit",
            "nonlocal_exact",
            "nonlocal_mc",
            "nonlocal_mc_se",
            "gap_exact",
            "gap_mc",
            "relative_gap_exact",
            "gradient_term_v",
            "remainder_vi_bound",
        ],
    );
    for (i, &eps) in cfg.conv_eps_grid.iter().enumerate() {
        let ex = nonlocal_energy_exact(&v, &mu, alpha, eps)?;
        let est = nonlocal_energy(
            &v,
            &mu,
            alpha,
            eps,
            cfg.conv_mc,
            &SeededRng::keyed(cfg.seed, &[TAG_CONVERGENCE, 2, i as u64]),
            Integrand::Difference,
        )?;
        eps_sweep.push(vec![
            fmt_f(eps),
            fmt_f(local),
            fmt_f(ex),
            fmt_f(est.value),
            fmt_f(est.std_error),
            fmt_f((ex - local).abs()),
            fmt_f((est.value - local).abs()),
            fmt_f((ex - local).abs() / local),
            fmt_f(gradient_term_v(&v, &mu, alpha, eps)?),
            fmt_f(remainder_term_vi_bound(&v, &mu, alpha, eps)?),
        ]);
    }
    report.tables = vec![sweep, n_summary, eps_sweep];
    Ok(report)
}
