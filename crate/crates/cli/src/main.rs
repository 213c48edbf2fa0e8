use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disc_source::config::{ConfigError, Engine, ExperimentConfig};
use disc_source::experiments::{run_forward, run_inversion, run_table};
use disc_source::verify::run_verify;

#[derive(Parser)]
#[command(version, about = "Heat-equation point-source recovery on the unit disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `noise.seed` (first seed of a table).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Engine generating the flux data.
    #[arg(long, global = true, value_enum)]
    engine: Option<Engine>,
    /// Worker threads for parallel runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Flux traces at the observation angles, plus the final FEM field.
    Forward,
    /// Noisy data, then gradient descent for every configured objective.
    Invert,
    /// Inversions over the configured noise levels and seeds, with medians.
    Table,
    /// Self-check suite; exits with status 1 if any check fails.
    Verify,
    /// Flux traces from the Bessel series only.
    Spectral,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if let Some(engine) = cli.engine {
        cfg.engine = engine;
    }
    if cli.jobs == Some(0) {
        return Err(ConfigError("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let out = cfg.out.as_path();
    match cli.command {
        Command::Forward => {
            run_forward(cfg, cfg.engine, out)?;
            println!("wrote flux traces to {}", out.display());
        }
        Command::Spectral => {
            run_forward(cfg, Engine::Spectral, out)?;
            println!("wrote spectral flux traces to {}", out.display());
        }
        Command::Invert => {
            let res = run_inversion(cfg, cfg.engine, out)?;
            for row in &res.rows {
                println!("{:<40} r={:.6} theta={:.6} err_r={:.3e} err_theta={:.3e}", row.label, row.r, row.theta, row.err_r, row.err_theta);
            }
        }
        Command::Table => {
            let res = run_table(cfg, cfg.engine, out)?;
            for row in &res.rows {
                println!("{:<40} r={:.6} theta={:.6} err_r={:.3e} err_theta={:.3e}", row.label, row.r, row.theta, row.err_r, row.err_theta);
            }
        }
        Command::Verify => {
            let report = run_verify(cfg, out)?;
            print!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
