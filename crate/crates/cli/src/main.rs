use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use cylcover::processes::DirectionalLaw;
use cylcover::theory;
use cylcover_cli::report::{condition_report, theory_report, verify_report};
use cylcover_cli::sweep::{run_and_write, summarize, summary_json};
use cylcover_cli::{ExperimentConfig, SweepOptions, VerifyConfig};
use serde_json::Value;

/// Poisson cylinder coverage experiments.
#[derive(Debug, Parser)]
#[command(name = "cylcover", version)]
struct Cli {
    /// Configuration file (key = value lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the file's `master_seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file; overrides the file's `output_path`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads. Changes speed only, never output.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Constants for uniform directions: kappa, inf phi_d, c* and its limit.
    Theory {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Quadrature tolerance (default depends on d).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Monte Carlo cross-checks of crossing probability, cover counts and
    /// uncovered volume. Exits with status 1 if a check fails.
    Verify {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Coverage radius for every (rho, replication) of a config; writes the
    /// CSV and a JSON summary next to it.
    Sweep {
        /// Record wall-clock times in the CSV (makes reruns differ).
        #[arg(long)]
        timing: bool,
    },
    /// Probabilities of all orthant cones under a directional law.
    Condition {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// `uniform`, `cone:+1,-1,...` or `fixed:s1,...,sd`.
        #[arg(long, default_value = "uniform")]
        law: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

fn read_config(path: &Option<PathBuf>) -> Result<Option<String>> {
    path.as_ref()
        .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display())))
        .transpose()
}

fn emit(value: &Value, out: &Option<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build()?;
    match cli.command {
        Command::Theory { d, tol } => {
            if cli.config.is_some() {
                bail!("theory takes no config file");
            }
            if d < 2 {
                bail!("d must be at least 2");
            }
            let tol = tol.unwrap_or_else(|| theory::default_tol(d));
            emit(&theory_report(d, tol)?, &cli.out)?;
        }
        Command::Verify { d, rho, c, reps } => {
            let mut cfg = match read_config(&cli.config)? {
                Some(text) => VerifyConfig::parse(&text)?,
                None => VerifyConfig::default(),
            };
            cfg.d = d.unwrap_or(cfg.d);
            cfg.rho = rho.unwrap_or(cfg.rho);
            cfg.c = c.unwrap_or(cfg.c);
            cfg.n_reps = reps.unwrap_or(cfg.n_reps);
            cfg.master_seed = cli.seed.unwrap_or(cfg.master_seed);
            cfg.validate()?;
            let (passed, report) = pool.install(|| verify_report(&cfg))?;
            emit(&report, &cli.out)?;
            if !passed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Sweep { timing } => {
            let Some(text) = read_config(&cli.config)? else {
                bail!("sweep needs --config");
            };
            let cfg = ExperimentConfig::parse_with(&text, cli.seed, cli.out.clone())?;
            let records = run_and_write(&cfg, SweepOptions { threads: cli.threads, timing })?;
            eprintln!(
                "wrote {} rows to {} and summary to {}",
                records.len(),
                cfg.output_path.display(),
                cfg.summary_path().display()
            );
            println!("{}", serde_json::to_string_pretty(&summary_json(&summarize(&records)))?);
        }
        Command::Condition { d, law, samples } => {
            if cli.config.is_some() {
                bail!("condition takes no config file");
            }
            if d < 2 {
                bail!("d must be at least 2");
            }
            let law: DirectionalLaw = law.parse()?;
            emit(&condition_report(d, &law, samples, cli.seed.unwrap_or(0))?, &cli.out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
