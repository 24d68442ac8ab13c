use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hilbert_laplace_cli::report::write_report;
use hilbert_laplace_cli::{run, CliError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hlap", version, about = "Laplace learning experiments on Gaussian-measure data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key = value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true)]
    realizations: Option<usize>,

    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override any config key, e.g. --set weight_boost=500
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Record wall-clock times in the row CSV (breaks byte reproducibility)
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Discrete vs nonlocal vs local energy sweeps
    Convergence,
    /// Shifted white noise at increasing resolution
    Whitenoise,
    /// Brownian-bridge labeling tasks
    Bridge,
    /// Closed-form continuum quantities vs Monte Carlo
    Oracle,
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let experiment = match cli.command {
        Command::Convergence => Experiment::Convergence,
        Command::Whitenoise => Experiment::Whitenoise,
        Command::Bridge => Experiment::Bridge,
        Command::Oracle => Experiment::Oracle,
    };
    let mut cfg = ExperimentConfig::load(experiment, cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.realizations {
        cfg.realizations = r;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if cli.timing {
        cfg.timing = true;
    }
    for kv in &cli.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure(&cli).and_then(|cfg| {
        let report = run(&cfg)?;
        write_report(&cli.out, &cfg, &report)?;
        for s in &report.summary {
            println!(
                "{:<12} {:<28} {:<10} mean {:.3}  p10 {:.3}  p90 {:.3}",
                s.method, s.norm, s.resolution_or_task, s.mean, s.p10, s.p90
            );
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(2)
        }
    }
}
