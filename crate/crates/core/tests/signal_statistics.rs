//! Sampling statistics of the generated signals.

use hilbert_laplace::gaussian::SeededRng;
use hilbert_laplace::signals::{
    gen_brownian_bridge, gen_shifted_white_noise, grid, label_max, max_threshold, BasisFamily, Projector,
};

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn bridge_covariance_is_s_times_one_minus_t() {
    let n_grid = 65;
    let t = grid(n_grid);
    let (i25, i50, i75) = (16, 32, 48);
    assert_eq!((t[i25], t[i50], t[i75]), (0.25, 0.5, 0.75));
    let mut rng = SeededRng::new(3, 0);
    let paths = 40_000;
    let (mut v50, mut c) = (Vec::with_capacity(paths), 0.0);
    for _ in 0..paths {
        let b = gen_brownian_bridge(n_grid, &mut rng).unwrap();
        let x = b.values();
        assert_eq!((x[0], x[n_grid - 1]), (0.0, 0.0));
        v50.push(x[i50]);
        c += x[i25] * x[i75];
    }
    let (m, v) = mean_var(&v50);
    assert!(m.abs() < 0.01);
    assert!((v - 0.25).abs() < 0.01, "Var B_0.5 = {v}");
    let cov = c / paths as f64;
    assert!((cov - 0.0625).abs() < 0.005, "Cov = {cov}");
}

#[test]
fn bridge_sine_modes_have_variance_inverse_k_pi_squared() {
    let n_grid = 641;
    let p = Projector::new(BasisFamily::Sine, n_grid, 5).unwrap();
    let mut rng = SeededRng::new(4, 0);
    let coeffs: Vec<Vec<f64>> = (0..10_000)
        .map(|_| p.project(&gen_brownian_bridge(n_grid, &mut rng).unwrap()).unwrap().coeffs)
        .collect();
    for k in 1..=5 {
        let col: Vec<f64> = coeffs.iter().map(|c| c[k - 1]).collect();
        let (_, v) = mean_var(&col);
        let target = (k as f64 * std::f64::consts::PI).powi(-2);
        assert!((v / target - 1.0).abs() < 0.1, "mode {k}: {v} vs {target}");
    }
}

#[test]
fn max_label_is_balanced() {
    let mut rng = SeededRng::new(5, 0);
    let n = 100_000;
    let pos = (0..n)
        .filter(|_| label_max(&gen_brownian_bridge(641, &mut rng).unwrap()) > 0)
        .count();
    let frac = pos as f64 / n as f64;
    // continuous bridge: P(max > u_b) = exp(−2u_b²) = ½
    assert!((f64::exp(-2.0 * max_threshold().powi(2)) - 0.5).abs() < 1e-12);
    // the grid maximum undershoots; shift the level by ζ(½)/√(2π)·√Δt
    let shift = 0.5826 * (1.0f64 / 640.0).sqrt();
    let corrected = f64::exp(-2.0 * (max_threshold() + shift).powi(2));
    assert!((frac - corrected).abs() < 0.01, "{frac} vs {corrected}");
    assert!((frac - 0.5).abs() < 0.04, "{frac}");
}

#[test]
fn white_noise_cosine_coefficients_have_unit_variance() {
    for n_grid in [20, 160] {
        let p = Projector::new(BasisFamily::CosineWithConstant, n_grid, n_grid / 2).unwrap();
        let mut rng = SeededRng::new(6, n_grid as u64);
        let coeffs: Vec<Vec<f64>> = (0..4000)
            .map(|_| p.project(&gen_shifted_white_noise(n_grid, 1.0, &mut rng).unwrap()).unwrap().coeffs)
            .collect();
        let (m0, v0) = mean_var(&coeffs.iter().map(|c| c[0]).collect::<Vec<_>>());
        assert!((m0 - 1.0).abs() < 0.06, "shift {m0}");
        assert!((v0 - 1.0).abs() < 0.08, "constant mode variance {v0}");
        for k in [1, 3, n_grid / 4] {
            let (m, v) = mean_var(&coeffs.iter().map(|c| c[k]).collect::<Vec<_>>());
            assert!(m.abs() < 0.06);
            assert!((v - 1.0).abs() < 0.12, "N={n_grid} k={k}: {v}");
        }
    }
}
