pub mod bridge;
pub mod convergence;
pub mod oracle;
pub mod whitenoise;

use std::time::Instant;

use hilbert_laplace::graph::{pairwise_distances, select_epsilon, weight_matrix, KernelScale, NormSpec, Point};
use hilbert_laplace::learn::{error_rate, solve_normalized, solve_unnormalized, LabelSet};
use hilbert_laplace::signals::{to_fractional_coords, GridSignal, Projector};
use hilbert_laplace::spectrum::{CoefVector, WeightTable};
use hilbert_laplace::Error;
use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, Method, NormChoice, Solver};
use crate::error::CliError;
use crate::report::{ErrorRow, RunReport};

/// Stream tags keep experiments from sharing random draws under one seed.
pub(crate) const TAG_WHITENOISE: u64 = 1;
pub(crate) const TAG_BRIDGE: u64 = 2;
pub(crate) const TAG_CONVERGENCE: u64 = 3;
pub(crate) const TAG_ORACLE: u64 = 4;

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.threads > 0 {
        builder = builder.num_threads(cfg.threads);
    }
    let pool = builder.build()?;
    pool.install(|| match cfg.experiment {
        crate::config::Experiment::Whitenoise => whitenoise::run(cfg),
        crate::config::Experiment::Bridge => bridge::run(cfg),
        crate::config::Experiment::Convergence => convergence::run(cfg),
        crate::config::Experiment::Oracle => oracle::run(cfg),
    })
}

/// Points a method measures distances between, with the norm to use.
pub(crate) fn method_points(
    method: &Method,
    signals: &[GridSignal],
    projector: &Projector,
    weight_positions: &[usize],
    boost: f64,
) -> Result<(Vec<Point>, NormSpec), Error> {
    match method.norm {
        NormChoice::Euclidean => Ok((
            signals.iter().cloned().map(Point::Grid).collect(),
            NormSpec::Euclidean,
        )),
        NormChoice::Frac { s } => Ok((coef_points(signals, projector, s)?, NormSpec::Euclidean)),
        NormChoice::Weighted { s } => {
            let table = WeightTable::boosted(projector.n_modes(), weight_positions, boost)?;
            Ok((coef_points(signals, projector, s)?, NormSpec::Weighted(table)))
        }
    }
}

fn coef_points(signals: &[GridSignal], projector: &Projector, s: f64) -> Result<Vec<Point>, Error> {
    signals
        .iter()
        .map(|x| {
            let b = projector.project(x)?;
            Ok(Point::Coef(if s == 0.0 {
                CoefVector::new(b.coeffs)
            } else {
                to_fractional_coords(&b, s)
            }))
        })
        .collect()
}

/// 0-based coefficient positions whose basis frequency is in `modes`.
pub(crate) fn positions_of(projector: &Projector, modes: &[usize]) -> Vec<usize> {
    (0..projector.n_modes())
        .filter(|&i| modes.contains(&projector.family().mode(i)))
        .collect()
}

/// Distances plus the ε they induce (pinned or connectivity threshold).
pub(crate) struct Geometry {
    pub distances: DMatrix<f64>,
    pub eps: f64,
}

pub(crate) fn geometry(points: &[Point], norm: &NormSpec, cfg: &ExperimentConfig) -> Result<Geometry, Error> {
    let distances = pairwise_distances(points, norm)?;
    let eps = match cfg.epsilon {
        Some(e) => e,
        None => cfg.epsilon_factor * select_epsilon(&distances)?,
    };
    Ok(Geometry { distances, eps })
}

/// Solves one labeling problem and scores it on the unlabeled vertices.
pub(crate) fn score(
    geom: &Geometry,
    kernel: KernelScale,
    solver: Solver,
    truth: &[i8],
    n_labeled: usize,
) -> Result<f64, Error> {
    let g = weight_matrix(&geom.distances, geom.eps, kernel)?;
    let labels = LabelSet::first(truth[..n_labeled].iter().map(|&t| f64::from(t)).collect(), truth.len())?;
    let pred = match solver {
        Solver::Unnormalized => solve_unnormalized(&g, &labels)?,
        Solver::Normalized => solve_normalized(&g, &labels)?,
    };
    error_rate(&pred.hard_labels, truth, &labels)
}

/// Errors a single realization may absorb as a recorded failure.
pub(crate) fn is_recoverable(e: &Error) -> bool {
    matches!(e, Error::Disconnected { .. } | Error::Singular(_))
}

pub(crate) struct RowKey<'a> {
    pub cfg: &'a ExperimentConfig,
    pub realization: usize,
    pub method: &'a Method,
    pub res_or_task: String,
    pub order: (usize, usize),
}

pub(crate) fn make_row(key: RowKey<'_>, eps: f64, outcome: Result<f64, Error>, started: Instant) -> Result<ErrorRow, CliError> {
    let wall_ms = if key.cfg.timing {
        started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let (error_rate, failure) = match outcome {
        Ok(e) => (e, None),
        Err(e) if is_recoverable(&e) => {
            log::warn!(
                "realization {} {} {}: {e}",
                key.realization,
                key.method,
                key.res_or_task
            );
            (f64::NAN, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(ErrorRow {
        experiment: key.cfg.experiment.name(),
        seed: key.cfg.seed,
        realization: key.realization,
        method: key.method.solver_name().to_string(),
        norm: key.method.norm_label(key.cfg.weight_boost),
        resolution_or_task: key.res_or_task,
        epsilon: eps,
        error_rate,
        wall_ms,
        failure,
        order: key.order,
    })
}
