use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use repgeo::geometry::{full_report, ReportOptions};
use repgeo::harness::{self, Checkpoint, ExperimentConfig, WORKERS_ENV};
use repgeo::linalg::Rng;

#[derive(Parser)]
#[command(name = "repgeo", version, about = "Representational geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write results, checkpoints and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's `out`, then `out/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Added to every seed in the config.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Redraw plots from a finished run directory.
    Plot {
        #[arg(long)]
        out: PathBuf,
        /// Restrict to these metrics.
        #[arg(long = "metric")]
        metrics: Vec<String>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the geometry of a checkpointed network as JSON.
    Report {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> repgeo::Result<ExitCode> {
    match command {
        Command::Run { config, out, workers, seed_offset } => {
            let cfg = ExperimentConfig::load(&config)?;
            let violations = cfg.violations();
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{}: {v}", config.display());
                }
                return Ok(ExitCode::from(1));
            }
            let out = out
                .or_else(|| cfg.out.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.tag()));
            let workers = harness::resolve_workers(workers);
            let outcome = harness::run(&cfg, &out, workers, seed_offset)?;
            println!("{} runs, {} rows written to {}", outcome.records.len(), outcome.table.rows.len(), out.display());
            let failures = outcome.failures();
            for f in &failures {
                eprintln!("run {} failed: {}", f.id, f.error.as_deref().unwrap_or(""));
            }
            Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Plot { out, metrics } => {
            let filter = (!metrics.is_empty()).then_some(metrics.as_slice());
            let (written, warnings) = harness::plot_from_dir(&out, filter)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            for p in written {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let violations = harness::validate_file(&config);
            if violations.is_empty() {
                println!("{}: ok", config.display());
                return Ok(ExitCode::SUCCESS);
            }
            for v in &violations {
                println!("{}: {v}", config.display());
            }
            Ok(ExitCode::from(1))
        }
        Command::Report { checkpoint, layer, seed } => {
            let ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(&checkpoint)?)?;
            let report = full_report(&ckpt.network, &ckpt.task, layer, &mut Rng::new(seed), &ReportOptions::default())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
