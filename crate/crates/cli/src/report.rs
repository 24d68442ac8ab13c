//! Per-realization rows, summary statistics and CSV/JSON output.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// 17 significant digits; lossless for `f64`.
pub fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

/// One labeling run: a realization under one method at one resolution or task.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub experiment: &'static str,
    pub seed: u64,
    pub realization: usize,
    pub method: String,
    pub norm: String,
    pub resolution_or_task: String,
    pub epsilon: f64,
    /// NaN when the solve failed; see `failure`.
    pub error_rate: f64,
    pub wall_ms: f64,
    pub failure: Option<String>,
    /// Position of the resolution/task and method in the config, for sorting.
    pub order: (usize, usize),
}

pub const ROW_HEADER: [&str; 9] = [
    "experiment",
    "seed",
    "realization",
    "method",
    "norm",
    "resolution_or_task",
    "epsilon",
    "error_rate",
    "wall_ms",
];

impl ErrorRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.to_string(),
            self.seed.to_string(),
            self.realization.to_string(),
            self.method.clone(),
            self.norm.clone(),
            self.resolution_or_task.clone(),
            fmt_f(self.epsilon),
            fmt_f(self.error_rate),
            fmt_f(self.wall_ms),
        ]
    }
}

/// Canonical order: resolution/task, then method, then realization.
pub fn sort_rows(rows: &mut [ErrorRow]) {
    rows.sort_by_key(|r| (r.order, r.realization));
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub norm: String,
    pub resolution_or_task: String,
    pub realizations: usize,
    pub failed: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub p10: f64,
    pub p90: f64,
    pub epsilon_mean: f64,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "method",
    "norm",
    "resolution_or_task",
    "realizations",
    "failed",
    "mean",
    "min",
    "max",
    "p10",
    "p90",
    "epsilon_mean",
];

impl SummaryRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.norm.clone(),
            self.resolution_or_task.clone(),
            self.realizations.to_string(),
            self.failed.to_string(),
            fmt_f(self.mean),
            fmt_f(self.min),
            fmt_f(self.max),
            fmt_f(self.p10),
            fmt_f(self.p90),
            fmt_f(self.epsilon_mean),
        ]
    }
}

/// Nearest rank: the `⌈pR⌉`-th smallest of `sorted`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Groups sorted rows by (resolution/task, method); statistics skip failed runs.
pub fn summarize(rows: &[ErrorRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = rows[start].order;
        let end = start + rows[start..].iter().take_while(|r| r.order == key).count();
        let group = &rows[start..end];
        let mut errs: Vec<f64> = group
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| r.error_rate)
            .collect();
        errs.sort_by(f64::total_cmp);
        let ok = errs.len();
        let mean = if ok > 0 {
            errs.iter().sum::<f64>() / ok as f64
        } else {
            f64::NAN
        };
        let eps_mean = group.iter().map(|r| r.epsilon).sum::<f64>() / group.len() as f64;
        out.push(SummaryRow {
            method: group[0].method.clone(),
            norm: group[0].norm.clone(),
            resolution_or_task: group[0].resolution_or_task.clone(),
            realizations: group.len(),
            failed: group.len() - ok,
            mean,
            min: errs.first().copied().unwrap_or(f64::NAN),
            max: errs.last().copied().unwrap_or(f64::NAN),
            p10: nearest_rank(&errs, 0.1),
            p90: nearest_rank(&errs, 0.9),
            epsilon_mean: eps_mean,
        });
        start = end;
    }
    out
}

/// A free-form numeric table (convergence sweeps, oracle comparisons).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Column by header name, parsed as `f64`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[i].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub rows: Vec<ErrorRow>,
    pub summary: Vec<SummaryRow>,
    /// Extra tables; for convergence and oracle these carry the results.
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn from_rows(mut rows: Vec<ErrorRow>) -> Self {
        sort_rows(&mut rows);
        let summary = summarize(&rows);
        Self {
            rows,
            summary,
            ..Default::default()
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_for(&self, norm: &str, res_or_task: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.norm == norm && s.resolution_or_task == res_or_task)
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes `<exp>_rows.csv`, `<exp>_summary.csv`, one CSV per extra table and
/// `config_echo.json`.
pub fn write_report(out: &Path, cfg: &ExperimentConfig, report: &RunReport) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let exp = cfg.experiment.name();
    let strs = |h: &[&str]| h.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    if matches!(
        cfg.experiment,
        crate::config::Experiment::Whitenoise | crate::config::Experiment::Bridge
    ) {
        let rows: Vec<Vec<String>> = report.rows.iter().map(ErrorRow::record).collect();
        write_csv(&out.join(format!("{exp}_rows.csv")), &strs(&ROW_HEADER), &rows)?;
        let summary: Vec<Vec<String>> = report.summary.iter().map(SummaryRow::record).collect();
        write_csv(&out.join(format!("{exp}_summary.csv")), &strs(&SUMMARY_HEADER), &summary)?;
        let failures: Vec<Vec<String>> = report
            .rows
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(|f| {
                    vec![
                        r.realization.to_string(),
                        r.method.clone(),
                        r.norm.clone(),
                        r.resolution_or_task.clone(),
                        f.clone(),
                    ]
                })
            })
            .collect();
        if !failures.is_empty() {
            write_csv(
                &out.join(format!("{exp}_failures.csv")),
                &strs(&["realization", "method", "norm", "resolution_or_task", "reason"]),
                &failures,
            )?;
        }
    }
    for t in &report.tables {
        write_csv(&out.join(format!("{}.csv", t.name)), &t.header, &t.rows)?;
    }
    let echo = serde_json::json!({
        "config": cfg,
        "epsilon": report.rows.iter().map(|r| serde_json::json!({
            "realization": r.realization,
            "method": r.method,
            "norm": r.norm,
            "resolution_or_task": r.resolution_or_task,
            "epsilon": r.epsilon,
        })).collect::<Vec<_>>(),
        "warnings": report.warnings,
    });
    let path = out.join("config_echo.json");
    fs::write(&path, serde_json::to_string_pretty(&echo)? + "\n").map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
