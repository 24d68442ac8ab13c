//! Shifted white noise at increasing grid resolution.
//!
//! Class `±1` signals are `±1 + √N z` on an `N`-point grid. Only the constant
//! mode carries the class, so a norm that damps high frequencies should keep
//! working as `N` grows while raw Euclidean distances drown in noise.

use std::time::Instant;

use hilbert_laplace::gaussian::SeededRng;
use hilbert_laplace::signals::{gen_shifted_white_noise, BasisFamily, GridSignal, Projector};
use rayon::prelude::*;

use super::{geometry, make_row, method_points, positions_of, score, RowKey, TAG_WHITENOISE};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{ErrorRow, RunReport};

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let projectors = cfg
        .wn_grids
        .iter()
        .map(|&n| Projector::new(BasisFamily::CosineWithConstant, n, n / 2))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<ErrorRow>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| realization(cfg, r, &projectors))
        .collect::<Result<_, _>>()?;
    Ok(RunReport::from_rows(rows.into_iter().flatten().collect()))
}

fn realization(cfg: &ExperimentConfig, r: usize, projectors: &[Projector]) -> Result<Vec<ErrorRow>, CliError> {
    let mut rows = Vec::new();
    for (gi, (&n_grid, projector)) in cfg.wn_grids.iter().zip(projectors).enumerate() {
        let mut rng = SeededRng::keyed(cfg.seed, &[TAG_WHITENOISE, r as u64, n_grid as u64]);
        let truth: Vec<i8> = (0..cfg.n_points)
            .map(|_| if rng.uniform() < 0.5 { -1 } else { 1 })
            .collect();
        let signals: Vec<GridSignal> = truth
            .iter()
            .map(|&c| gen_shifted_white_noise(n_grid, f64::from(c), &mut rng))
            .collect::<Result<_, _>>()?;
        let boosted = positions_of(projector, &cfg.weight_modes);
        for (mi, method) in cfg.wn_methods.iter().enumerate() {
            let started = Instant::now();
            let (points, norm) = method_points(method, &signals, projector, &boosted, cfg.weight_boost)?;
            let geom = geometry(&points, &norm, cfg)?;
            let outcome = score(&geom, cfg.kernel_scale, method.solver, &truth, cfg.n_labeled);
            rows.push(make_row(
                RowKey {
                    cfg,
                    realization: r,
                    method,
                    res_or_task: format!("N={n_grid}"),
                    order: (gi, mi),
                },
                geom.eps,
                outcome,
                started,
            )?);
        }
    }
    Ok(rows)
}
