//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Command-line flags and
//! `--set key=value` pairs are applied on top of the file, in that order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hilbert_laplace::graph::KernelScale;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Convergence,
    Whitenoise,
    Bridge,
    Oracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Convergence => "convergence",
            Experiment::Whitenoise => "whitenoise",
            Experiment::Bridge => "bridge",
            Experiment::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Unnormalized,
    Normalized,
}

/// Distance used by one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormChoice {
    /// Raw grid values.
    Euclidean,
    /// `H^{-s}` coordinates; `s = 0` is `L²`.
    Frac { s: f64 },
    /// `H^{-s}` coordinates reweighted by the configured boost table.
    Weighted { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Method {
    pub solver: Solver,
    pub norm: NormChoice,
}

impl Method {
    pub fn solver_name(&self) -> &'static str {
        match self.solver {
            Solver::Unnormalized => "unnormalized",
            Solver::Normalized => "normalized",
        }
    }

    pub fn norm_label(&self, boost: f64) -> String {
        match self.norm {
            NormChoice::Euclidean => "euclidean".into(),
            NormChoice::Frac { s } if s == 0.0 => "L2".into(),
            NormChoice::Frac { s } => format!("H^-{s}"),
            NormChoice::Weighted { s } => format!("weighted H^-{s} c={boost}"),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let norm = match self.norm {
            NormChoice::Euclidean => "euclidean".to_string(),
            NormChoice::Frac { s } => format!("frac({s})"),
            NormChoice::Weighted { s } => format!("weighted({s})"),
        };
        write!(f, "{}/{norm}", self.solver_name())
    }
}

impl FromStr for Method {
    type Err = String;

    /// `unnormalized/euclidean`, `normalized/frac(2)`, `normalized/weighted(0.01)`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (solver, norm) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| format!("method `{s}` is not of the form solver/norm"))?;
        let solver = match solver.trim() {
            "unnormalized" => Solver::Unnormalized,
            "normalized" => Solver::Normalized,
            other => return Err(format!("unknown solver `{other}`")),
        };
        let norm = norm.trim();
        let arg = |prefix: &str| -> Option<Result<f64, String>> {
            norm.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{norm}`: {e}")))
        };
        let norm = if norm == "euclidean" {
            NormChoice::Euclidean
        } else if norm == "l2" || norm == "L2" {
            NormChoice::Frac { s: 0.0 }
        } else if let Some(v) = arg("frac") {
            NormChoice::Frac { s: v? }
        } else if let Some(v) = arg("weighted") {
            NormChoice::Weighted { s: v? }
        } else {
            return Err(format!("unknown norm `{norm}`"));
        };
        Ok(Method { solver, norm })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Avg,
    Highfreq,
    Max,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Avg => "avg",
            Task::Highfreq => "highfreq",
            Task::Max => "max",
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "avg" => Ok(Task::Avg),
            "highfreq" => Ok(Task::Highfreq),
            "max" => Ok(Task::Max),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFamily {
    Linear,
    Sine,
}

impl FromStr for TestFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "linear" => Ok(TestFamily::Linear),
            "sine" => Ok(TestFamily::Sine),
            other => Err(format!("unknown test function `{other}`")),
        }
    }
}

fn kernel_name(k: &KernelScale) -> &'static str {
    match k {
        KernelScale::Full => "full",
        KernelScale::Half => "half",
    }
}

fn parse_kernel(s: &str) -> Result<KernelScale, String> {
    match s.trim() {
        "full" => Ok(KernelScale::Full),
        "half" => Ok(KernelScale::Half),
        other => Err(format!("unknown kernel scale `{other}` (full | half)")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub realizations: usize,
    /// 0 lets rayon decide.
    pub threads: usize,
    pub n_points: usize,
    pub n_labeled: usize,
    /// Pins ε instead of the connectivity threshold.
    pub epsilon: Option<f64>,
    /// Multiplies the connectivity threshold; ignored when ε is pinned.
    pub epsilon_factor: f64,
    #[serde(serialize_with = "ser_kernel")]
    pub kernel_scale: KernelScale,

    pub wn_grids: Vec<usize>,
    pub wn_methods: Vec<Method>,

    pub bridge_grid: usize,
    pub bridge_modes: usize,
    pub bridge_tasks: Vec<Task>,
    pub bridge_methods: Vec<Method>,
    /// 1-based sine frequencies that get `weight_boost`.
    pub weight_modes: Vec<usize>,
    pub weight_boost: f64,

    pub conv_dim: usize,
    pub conv_bridge_s: f64,
    pub conv_alpha: f64,
    pub conv_beta: f64,
    pub conv_eps: f64,
    pub conv_n: Vec<usize>,
    pub conv_eps_grid: Vec<f64>,
    pub conv_mc: usize,
    pub conv_test: TestFamily,
    pub conv_sweep_test: TestFamily,

    pub oracle_dim: usize,
    pub oracle_bridge_s: f64,
    pub oracle_alpha: f64,
    pub oracle_beta: f64,
    pub oracle_eps_grid: Vec<f64>,
    pub oracle_mc: usize,

    /// Write measured wall times; off keeps outputs byte-reproducible.
    pub timing: bool,
}

fn ser_kernel<S: serde::Serializer>(k: &KernelScale, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(kernel_name(k))
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let m = |s: &str| s.parse::<Method>().expect("built-in method");
        Self {
            experiment,
            seed: 1,
            realizations: 50,
            threads: 0,
            n_points: 200,
            n_labeled: 20,
            epsilon: None,
            epsilon_factor: 1.0,
            kernel_scale: match experiment {
                Experiment::Whitenoise | Experiment::Bridge => KernelScale::Half,
                Experiment::Convergence | Experiment::Oracle => KernelScale::Full,
            },
            wn_grids: vec![10, 20, 40, 80, 160, 320, 640],
            wn_methods: vec![
                m("unnormalized/euclidean"),
                m("normalized/l2"),
                m("normalized/frac(1.01)"),
            ],
            bridge_grid: 641,
            bridge_modes: 320,
            bridge_tasks: vec![Task::Avg, Task::Highfreq, Task::Max],
            bridge_methods: vec![
                m("unnormalized/euclidean"),
                m("normalized/frac(0.01)"),
                m("normalized/frac(2)"),
                m("normalized/weighted(0.01)"),
            ],
            weight_modes: vec![9, 10, 11],
            weight_boost: 50.0,
            conv_dim: 5,
            conv_bridge_s: 0.0,
            conv_alpha: 0.0,
            conv_beta: 0.0,
            conv_eps: 0.5,
            conv_n: vec![250, 500, 1000, 2000],
            conv_eps_grid: vec![0.8, 0.4, 0.2, 0.1],
            conv_mc: 100_000,
            conv_test: TestFamily::Sine,
            conv_sweep_test: TestFamily::Linear,
            oracle_dim: 5,
            oracle_bridge_s: 0.0,
            oracle_alpha: 0.0,
            oracle_beta: 0.0,
            oracle_eps_grid: vec![2.0, 1.0, 0.5, 0.25, 0.125],
            oracle_mc: 100_000,
            timing: false,
        }
    }

    pub fn load(experiment: Experiment, path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(experiment);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            cfg.apply_text(&text)?;
        }
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
                key: format!("line {}", lineno + 1),
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// `key=value` from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config {
            key: kv.to_string(),
            message: "override must look like key=value".into(),
        })?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |message: String| CliError::Config {
            key: key.to_string(),
            message,
        };
        fn one<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
        }
        fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
        where
            T::Err: fmt::Display,
        {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| one(s.trim()))
                .collect()
        }
        let r: Result<(), String> = (|| {
            match key {
                "seed" => self.seed = one(value)?,
                "realizations" => self.realizations = one(value)?,
                "threads" => self.threads = one(value)?,
                "n_points" => self.n_points = one(value)?,
                "n_labeled" => self.n_labeled = one(value)?,
                "epsilon" => {
                    self.epsilon = match value {
                        "" | "auto" => None,
                        v => Some(one(v)?),
                    }
                }
                "epsilon_factor" => self.epsilon_factor = one(value)?,
                "kernel_scale" => self.kernel_scale = parse_kernel(value)?,
                "wn_grids" => self.wn_grids = list(value)?,
                "wn_methods" => self.wn_methods = list(value)?,
                "bridge_grid" => self.bridge_grid = one(value)?,
                "bridge_modes" => self.bridge_modes = one(value)?,
                "bridge_tasks" => self.bridge_tasks = list(value)?,
                "bridge_methods" => self.bridge_methods = list(value)?,
                "weight_modes" => self.weight_modes = list(value)?,
                "weight_boost" => self.weight_boost = one(value)?,
                "conv_dim" => self.conv_dim = one(value)?,
                "conv_bridge_s" => self.conv_bridge_s = one(value)?,
                "conv_alpha" => self.conv_alpha = one(value)?,
                "conv_beta" => self.conv_beta = one(value)?,
                "conv_eps" => self.conv_eps = one(value)?,
                "conv_n" => self.conv_n = list(value)?,
                "conv_eps_grid" => self.conv_eps_grid = list(value)?,
                "conv_mc" => self.conv_mc = one(value)?,
                "conv_test" => self.conv_test = one(value)?,
                "conv_sweep_test" => self.conv_sweep_test = one(value)?,
                "oracle_dim" => self.oracle_dim = one(value)?,
                "oracle_bridge_s" => self.oracle_bridge_s = one(value)?,
                "oracle_alpha" => self.oracle_alpha = one(value)?,
                "oracle_beta" => self.oracle_beta = one(value)?,
                "oracle_eps_grid" => self.oracle_eps_grid = list(value)?,
                "oracle_mc" => self.oracle_mc = one(value)?,
                "timing" => self.timing = one(value)?,
                _ => return Err("unknown key".into()),
            }
            Ok(())
        })();
        r.map_err(bad)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, message: &str| {
            Err(CliError::Config {
                key: key.into(),
                message: message.into(),
            })
        };
        if self.realizations == 0 {
            return bad("realizations", "must be >= 1");
        }
        if self.n_labeled == 0 || self.n_labeled >= self.n_points {
            return bad("n_labeled", "need 1 <= n_labeled < n_points");
        }
        if self.wn_grids.iter().any(|&n| n < 2) || self.bridge_grid < 2 {
            return bad("grid", "grid sizes must be >= 2");
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad("epsilon", "must be finite and > 0");
            }
        }
        if !(self.epsilon_factor > 0.0 && self.epsilon_factor.is_finite()) {
            return bad("epsilon_factor", "must be finite and > 0");
        }
        if self.conv_n.iter().any(|&n| n < 2) {
            return bad("conv_n", "sample sizes must be >= 2");
        }
        if self.conv_mc < 2 || self.oracle_mc < 2 {
            return bad("conv_mc", "Monte Carlo sizes must be >= 2");
        }
        if self.conv_dim == 0 || self.oracle_dim == 0 {
            return bad("conv_dim", "dimension must be >= 1");
        }
        if self.weight_modes.iter().any(|&k| k == 0 || k > self.bridge_modes) {
            return bad("weight_modes", "sine frequencies run from 1 to bridge_modes");
        }
        if matches!(self.experiment, Experiment::Convergence | Experiment::Oracle)
            && self.kernel_scale != KernelScale::Full
        {
            return bad("kernel_scale", "continuum comparisons assume the full kernel exp(-t^2)");
        }
        if !(self.weight_boost > 0.0) {
            return bad("weight_boost", "must be > 0");
        }
        Ok(())
    }
}
