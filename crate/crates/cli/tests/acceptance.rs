//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::num::NonZeroUsize;
use std::process::Command;
use std::time::Instant;

use gauss_quad::GaussHermite;
use hilbert_laplace::continuum::{
    local_limit, nonlocal_energy, nonlocal_energy_exact, second_moment_series, Integrand, TestFunction,
};
use hilbert_laplace::gaussian::{GaussianMeasure, SeededRng};
use hilbert_laplace::graph::{
    normalized_laplacian, pairwise_distances, select_epsilon, unnormalized_laplacian, KernelScale, NormSpec,
    Point, WeightedGraph,
};
use hilbert_laplace::learn::{solve_normalized, solve_unnormalized, LabelSet};
use hilbert_laplace::signals::{
    gen_brownian_bridge, grid, label_avg, label_highfreq, label_max, BasisFamily, Projector,
};
use hilbert_laplace::spectrum::{frac_inner, frac_norm, CoefVector, Spectrum};
use hilbert_laplace_cli::config::{Experiment, ExperimentConfig, TestFamily};
use hilbert_laplace_cli::experiments::convergence::{default_direction, discrete_energy, test_function};
use hilbert_laplace_cli::report::RunReport;
use nalgebra::{DMatrix, DVector};

type Outcome = (bool, String);

fn rule(n: usize) -> GaussHermite {
    GaussHermite::new(NonZeroUsize::new(n).unwrap())
}

/// Tensor Gauss–Hermite expectation of `f` under `N(mean, diag(var))`.
fn tensor_expect(q: &GaussHermite, mean: &[f64], var: &[f64], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let pairs = q.as_node_weight_pairs();
    let d = mean.len();
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let (t, wi) = pairs[idx[i]];
            y[i] = mean[i] + (2.0 * var[i]).sqrt() * t;
            w *= wi;
        }
        total += w * f(&y);
        let mut i = 0;
        loop {
            if i == d {
                return total / std::f64::consts::PI.powf(d as f64 / 2.0);
            }
            idx[i] += 1;
            if idx[i] < pairs.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn conjugacy() -> Outcome {
    let q = rule(150);
    let exact = rule(6);
    let cases: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> = vec![
        (vec![1.0], vec![0.0], vec![0.4], 0.0, 1.0),
        (vec![0.2], vec![0.3], vec![-0.5], 0.5, 0.4),
        (vec![0.6], vec![-0.1], vec![1.2], -0.5, 2.0),
        (vec![0.9, 0.3], vec![0.0, 0.0], vec![0.2, -0.7], 0.0, 0.8),
        (vec![0.5, 0.1], vec![0.4, -0.2], vec![-0.3, 0.1], 1.0, 0.6),
    ];
    let fs: Vec<(&str, Box<dyn Fn(&[f64]) -> f64>)> = vec![
        ("one", Box::new(|_| 1.0)),
        ("linear", Box::new(|y| 1.5 * y[0] - 0.4 * y[y.len() - 1] + 0.2)),
        ("quadratic", Box::new(|y| y.iter().map(|v| v * v).sum::<f64>() - y[0] * y[y.len() - 1])),
    ];
    let mut worst: f64 = 0.0;
    for (lam, mean, x, alpha, eps) in &cases {
        let mu = GaussianMeasure::from_parts(CoefVector::new(mean.clone()), lam.clone()).unwrap();
        let c = mu.conjugate(&CoefVector::new(x.clone()), *alpha, *eps).unwrap();
        let kernel = |y: &[f64]| -> f64 {
            let d2: f64 = (0..y.len()).map(|i| lam[i].powf(*alpha) * (y[i] - x[i]).powi(2)).sum();
            (-d2 / (eps * eps)).exp()
        };
        let z = tensor_expect(&q, mean, lam, &kernel);
        for (_, f) in &fs {
            let num = tensor_expect(&q, mean, lam, &|y| kernel(y) * f(y));
            let closed = tensor_expect(&exact, c.mean(), c.eigenvalues(), f.as_ref());
            worst = worst.max(((num / z) - closed).abs() / closed.abs().max(1e-300));
        }
    }
    (worst < 1e-6, format!("max relative error {worst:.2e} over {} cases x 3 functions", cases.len()))
}

fn second_moment() -> Outcome {
    let q = rule(32);
    let mut cfg_rng = SeededRng::new(2024, 0);
    let mut lines = Vec::new();
    let mut ok = true;
    for c in 0..5 {
        let scale = 0.2 + 0.8 * cfg_rng.uniform();
        let decay = 1.0 + 2.0 * cfg_rng.uniform();
        let lam: Vec<f64> = (1..=5).map(|k| scale * (k as f64).powf(-decay)).collect();
        let alpha = cfg_rng.uniform() - 0.5;
        let beta = cfg_rng.uniform() - 0.5;
        let eps = 0.4 + 1.1 * cfg_rng.uniform();
        let s = Spectrum::new(lam.clone()).unwrap();
        let mu = GaussianMeasure::centered(&s);
        let n = 1_000_000usize;
        let mut rng = SeededRng::new(31, c);
        let mut x = vec![0.0; 5];
        let nodes = q.as_node_weight_pairs();
        let pow_a: Vec<f64> = lam.iter().map(|l| l.powf(alpha)).collect();
        let pow_b: Vec<f64> = lam.iter().map(|l| l.powf(beta)).collect();
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            mu.sample_into(&mut rng, &mut x);
            // inner expectation over the kernel-weighted measure, mode by mode
            let v: f64 = (0..5)
                .map(|i| {
                    let (l, xi) = (lam[i], x[i]);
                    let (mut z, mut m2) = (0.0, 0.0);
                    for &(t, w) in nodes {
                        let y = (2.0 * l).sqrt() * t;
                        let k = w * (-pow_a[i] * (y - xi).powi(2) / (eps * eps)).exp();
                        z += k;
                        m2 += k * (y - xi).powi(2);
                    }
                    pow_b[i] * m2 / z
                })
                .sum::<f64>()
                / (eps * eps);
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
        let closed = second_moment_series(&s, alpha, beta, eps).unwrap();
        let z = (mean - closed) / se;
        ok &= z.abs() <= 3.0;
        lines.push(format!("z={z:+.2}"));
    }
    (ok, lines.join(" "))
}

fn localization() -> Outcome {
    let s = Spectrum::bridge(0.0, 10).unwrap();
    let mu = GaussianMeasure::centered(&s);
    let u = TestFunction::linear(default_direction(&s, 0.0), 0.0).unwrap();
    let local = local_limit(&u, &mu, 0.0).unwrap();
    let mut gaps = Vec::new();
    let mut last = (0.0, 0.0);
    for (i, eps) in [0.8, 0.4, 0.2, 0.1].into_iter().enumerate() {
        let e = nonlocal_energy(&u, &mu, 0.0, eps, 1_000_000, &SeededRng::new(41, i as u64), Integrand::Difference)
            .unwrap();
        let exact = nonlocal_energy_exact(&u, &mu, 0.0, eps).unwrap();
        assert!(e.agrees_with(exact, 5.0), "closed form {exact} vs {} ± {}", e.value, e.std_error);
        let gap = (e.value - local).abs();
        gaps.push(gap);
        last = (gap, e.std_error);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let rel = (last.0 + 3.0 * last.1) / local;
    (
        decreasing && rel < 0.10,
        format!(
            "gaps {:?}, final (gap + 3se)/local = {rel:.4}",
            gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn large_data() -> Outcome {
    let s = Spectrum::bridge(0.0, 5).unwrap();
    let mu = GaussianMeasure::centered(&s);
    let u = test_function(TestFamily::Sine, &s, 0.0).unwrap();
    let eps = 0.5;
    let target = nonlocal_energy_exact(&u, &mu, 0.0, eps).unwrap();
    let mean_gap = |n: usize| -> f64 {
        (0..10u64)
            .map(|seed| {
                let mut rng = SeededRng::keyed(seed, &[4, n as u64]);
                let e = discrete_energy(&u, &s, &mu, 0.0, eps, n, KernelScale::Full, &mut rng).unwrap();
                (e - target).abs()
            })
            .sum::<f64>()
            / 10.0
    };
    let (small, large) = (mean_gap(250), mean_gap(2000));
    (large < 0.5 * small, format!("mean gap n=250 {small:.4}, n=2000 {large:.4}, ratio {:.3}", large / small))
}

fn random_graph(rng: &mut SeededRng, n: usize) -> WeightedGraph {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if rng.uniform() < 0.3 { 0.0 } else { rng.uniform() + 0.01 };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    for i in 1..n {
        w[(i - 1, i)] = w[(i - 1, i)].max(0.05);
        w[(i, i - 1)] = w[(i - 1, i)];
    }
    WeightedGraph::from_weights(w, 1.0, KernelScale::Full).unwrap()
}

fn solvers() -> Outcome {
    let mut rng = SeededRng::new(5, 0);
    let (mut worst_u, mut worst_n, mut violations) = (0.0f64, 0.0f64, 0);
    for _ in 0..100 {
        let n = 3 + rng.index(48);
        let g = random_graph(&mut rng, n);
        let k = 1 + rng.index(n / 2);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + rng.index(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        let vals: Vec<f64> = (0..k).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let labels = LabelSet::new(idx.clone(), vals.clone(), n).unwrap();
        let free: Vec<usize> = (0..n).filter(|i| !idx.contains(i)).collect();

        let p = solve_unnormalized(&g, &labels).unwrap();
        let r = unnormalized_laplacian(&g) * DVector::from_vec(p.values.clone());
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &i in &free {
            worst_u = worst_u.max(r[i].abs());
            if p.values[i] < lo - 1e-12 || p.values[i] > hi + 1e-12 {
                violations += 1;
            }
        }
        let q = solve_normalized(&g, &labels).unwrap();
        let l = normalized_laplacian(&g);
        let r = (&l + l.transpose()) * DVector::from_vec(q.values);
        for &i in &free {
            worst_n = worst_n.max(r[i].abs());
        }
    }
    (
        worst_u < 1e-10 && worst_n < 1e-10 && violations == 0,
        format!("max residual unnormalized {worst_u:.1e}, normalized {worst_n:.1e}, max-principle violations {violations}"),
    )
}

fn run_default(exp: Experiment, sets: &[&str]) -> RunReport {
    let mut cfg = ExperimentConfig::defaults(exp);
    for kv in sets {
        cfg.apply_override(kv).unwrap();
    }
    hilbert_laplace_cli::run(&cfg).unwrap()
}

fn whitenoise() -> Outcome {
    let report = run_default(Experiment::Whitenoise, &[]);
    let mut ok = true;
    let mut worst_frac: f64 = 0.0;
    for n in [10, 20, 40, 80, 160, 320, 640] {
        let m = report.summary_for("H^-1.01", &format!("N={n}")).unwrap().mean;
        worst_frac = worst_frac.max(m);
        ok &= m <= 0.15;
    }
    let euc = report.summary_for("euclidean", "N=640").unwrap().mean;
    let l2 = report.summary_for("L2", "N=640").unwrap().mean;
    ok &= euc > 0.30 && l2 > 0.30;
    (
        ok,
        format!("worst H^-1.01 mean {worst_frac:.3} (<= 0.15), N=640 euclidean {euc:.3}, L2 {l2:.3} (> 0.30)"),
    )
}

fn bridge_table() -> Outcome {
    let report = run_default(Experiment::Bridge, &[]);
    let norms = ["euclidean", "H^-0.01", "H^-2", "weighted H^-0.01 c=50"];
    let targets = [
        ("avg", [0.114, 0.110, 0.054, 0.222]),
        ("highfreq", [0.496, 0.497, 0.510, 0.316]),
        ("max", [0.213, 0.210, 0.155, 0.310]),
    ];
    let mut ok = true;
    let mut cells = Vec::new();
    for (task, t) in targets {
        for (norm, target) in norms.iter().zip(t) {
            let m = report.summary_for(norm, task).unwrap().mean;
            let hit = (m - target).abs() <= 0.06;
            ok &= hit;
            cells.push(format!("{task}/{norm}={m:.3}{}", if hit { "" } else { "*" }));
        }
    }
    (ok, cells.join(" "))
}

fn reweighting() -> Outcome {
    let report = run_default(
        Experiment::Bridge,
        &["weight_boost=500", "bridge_tasks=highfreq", "bridge_methods=normalized/weighted(0.01)"],
    );
    let m = report.summary_for("weighted H^-0.01 c=500", "highfreq").unwrap().mean;
    (m <= 0.20, format!("highfreq mean at 500:1 is {m:.3} (<= 0.20)"))
}

fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip(["1", "4"]) {
        let status = Command::new(env!("CARGO_BIN_EXE_hlap"))
            .args(["bridge", "--seed", "9", "--threads", threads, "--out", dir.path().to_str().unwrap()])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
    }
    let a = std::fs::read(dirs[0].path().join("bridge_rows.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("bridge_rows.csv")).unwrap();
    (a == b && !a.is_empty(), format!("{} bytes, threads 1 vs 4 identical: {}", a.len(), a == b))
}

/// Spot checks of the invariants the crate's property tests cover at length.
fn properties() -> Outcome {
    let mut rng = SeededRng::new(10, 0);
    let mut failures = Vec::new();
    let s = Spectrum::bridge(0.5, 8).unwrap();
    for _ in 0..200 {
        let v = |r: &mut SeededRng| CoefVector::new((0..8).map(|_| r.standard_normal()).collect());
        let (x, y, z) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let (a, b) = (rng.standard_normal(), rng.standard_normal());
        let gamma = 2.0 * rng.uniform() - 1.0;
        let ax_by = CoefVector::new(x.iter().zip(y.iter()).map(|(p, q)| a * p + b * q).collect());
        let lhs = frac_inner(&ax_by, &z, gamma, &s).unwrap();
        let rhs = a * frac_inner(&x, &z, gamma, &s).unwrap() + b * frac_inner(&y, &z, gamma, &s).unwrap();
        if (lhs - rhs).abs() > 1e-10 * (1.0 + lhs.abs()) {
            failures.push("bilinearity");
        }
        let g = gamma.abs();
        if frac_norm(&x, g, &s).unwrap() > s.largest().powf(g / 2.0) * frac_norm(&x, 0.0, &s).unwrap() + 1e-12 {
            failures.push("norm inequality");
        }
    }
    for _ in 0..50 {
        let n = 2 + rng.index(7);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::Coef(CoefVector::new(vec![rng.standard_normal(), rng.standard_normal()])))
            .collect();
        let d = pairwise_distances(&pts, &NormSpec::Euclidean).unwrap();
        let eps = select_epsilon(&d).unwrap();
        if (eps - brute_force_threshold(&d)).abs() > 1e-12 {
            failures.push("MST epsilon");
        }
    }
    let draw = |seed| {
        let mut r = SeededRng::new(seed, 0);
        (0..20)
            .map(|_| {
                let b = gen_brownian_bridge(129, &mut r).unwrap();
                (label_avg(&b), label_highfreq(&b), label_max(&b))
            })
            .collect::<Vec<_>>()
    };
    if draw(3) != draw(3) {
        failures.push("label determinism");
    }
    let t = grid(33);
    let (mut c, paths) = (0.0, 20_000);
    let mut r = SeededRng::new(12, 0);
    for _ in 0..paths {
        let b = gen_brownian_bridge(33, &mut r).unwrap();
        c += b.values()[8] * b.values()[24];
    }
    let cov = c / paths as f64;
    let target = t[8] * (1.0 - t[24]);
    if (cov - target).abs() > 0.006 {
        failures.push("bridge covariance");
    }
    let p = Projector::new(BasisFamily::Sine, 641, 3).unwrap();
    let mut r = SeededRng::new(13, 0);
    let first: Vec<f64> = (0..5000)
        .map(|_| p.project(&gen_brownian_bridge(641, &mut r).unwrap()).unwrap().coeffs[0])
        .collect();
    let var = first.iter().map(|v| v * v).sum::<f64>() / first.len() as f64;
    if (var * std::f64::consts::PI.powi(2) - 1.0).abs() > 0.1 {
        failures.push("bridge mode variance");
    }
    failures.dedup();
    (failures.is_empty(), if failures.is_empty() { "all invariants hold".into() } else { failures.join(", ") })
}

/// Smallest pairwise distance whose threshold graph is connected.
fn brute_force_threshold(d: &DMatrix<f64>) -> f64 {
    let n = d.nrows();
    let mut cands: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[(i, j)]).collect();
    cands.sort_by(f64::total_cmp);
    for r in cands {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && d[(i, j)] <= r {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return r;
        }
    }
    unreachable!()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("conjugacy quadrature", conjugacy),
        ("second-moment identity", second_moment),
        ("localization", localization),
        ("large-data limit", large_data),
        ("solver correctness", solvers),
        ("white-noise resolution independence", whitenoise),
        ("Brownian-bridge table", bridge_table),
        ("aggressive reweighting", reweighting),
        ("thread-count determinism", determinism),
        ("property invariants", properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  ({:.1}s) {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
