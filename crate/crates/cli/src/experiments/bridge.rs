//! Brownian-bridge labeling tasks.
//!
//! Each realization draws one set of bridges on an `N`-point grid and
//! projects them onto the sine basis. Every method builds its graph once and
//! solves all tasks on it.

use std::time::Instant;

use hilbert_laplace::gaussian::SeededRng;
use hilbert_laplace::signals::{
    gen_brownian_bridge, label_avg, label_highfreq, label_max, BasisFamily, GridSignal, Projector,
};
use rayon::prelude::*;

use super::{geometry, make_row, method_points, positions_of, score, RowKey, TAG_BRIDGE};
use crate::config::{ExperimentConfig, Task};
use crate::error::CliError;
use crate::report::{ErrorRow, RunReport};

pub fn labels_for(task: Task, signals: &[GridSignal]) -> Vec<i8> {
    let f = match task {
        Task::Avg => label_avg,
        Task::Highfreq => label_highfreq,
        Task::Max => label_max,
    };
    signals.iter().map(f).collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let projector = Projector::new(BasisFamily::Sine, cfg.bridge_grid, cfg.bridge_modes)?;
    let rows: Vec<Vec<ErrorRow>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| realization(cfg, r, &projector))
        .collect::<Result<_, _>>()?;
    Ok(RunReport::from_rows(rows.into_iter().flatten().collect()))
}

fn realization(cfg: &ExperimentConfig, r: usize, projector: &Projector) -> Result<Vec<ErrorRow>, CliError> {
    let mut rng = SeededRng::keyed(cfg.seed, &[TAG_BRIDGE, r as u64]);
    let signals: Vec<GridSignal> = (0..cfg.n_points)
        .map(|_| gen_brownian_bridge(cfg.bridge_grid, &mut rng))
        .collect::<Result<_, _>>()?;
    let truths: Vec<Vec<i8>> = cfg.bridge_tasks.iter().map(|&t| labels_for(t, &signals)).collect();
    let boosted = positions_of(projector, &cfg.weight_modes);
    let mut rows = Vec::new();
    for (mi, method) in cfg.bridge_methods.iter().enumerate() {
        let started = Instant::now();
        let (points, norm) = method_points(method, &signals, projector, &boosted, cfg.weight_boost)?;
        let geom = geometry(&points, &norm, cfg)?;
        for (ti, (task, truth)) in cfg.bridge_tasks.iter().zip(&truths).enumerate() {
            let outcome = score(&geom, cfg.kernel_scale, method.solver, truth, cfg.n_labeled);
            rows.push(make_row(
                RowKey {
                    cfg,
                    realization: r,
                    method,
                    res_or_task: task.name().to_string(),
                    order: (ti, mi),
                },
                geom.eps,
                outcome,
                started,
            )?);
        }
    }
    Ok(rows)
}
