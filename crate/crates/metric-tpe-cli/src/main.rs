//! Command-line front end: run an experiment grid, run the exploration-base
//! ablation, or summarize an existing trial log.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use metric_tpe_cli::config::Config;
use metric_tpe_cli::record::read_trial_log;
use metric_tpe_cli::runner::{run_ablation, run_experiment, RunOutput};
use metric_tpe_cli::summary::{summarize, to_csv};

#[derive(Parser)]
#[command(
    name = "metric-tpe",
    version,
    about = "Benchmark runner for TPE optimization over metric categorical spaces"
)]
struct Cli {
    /// Shift every configured seed by this offset (for robustness reruns).
    #[arg(long, global = true, default_value_t = 0, allow_hyphen_values = true)]
    seed_offset: i64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured (problem × optimizer × seed) grid.
    Run { config: PathBuf },
    /// Run the metric optimizer over the configured exploration-base grid.
    Ablation { config: PathBuf },
    /// Aggregate a JSON-lines trial log into a summary CSV.
    Summarize {
        log: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(output: &RunOutput) {
    println!(
        "wrote {} trial records to {}",
        output.records.len(),
        output.trial_log.display()
    );
    println!(
        "wrote {} summary rows to {}",
        output.summary.len(),
        output.summary_csv.display()
    );
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let config = Config::load(&config)?;
            let output = run_experiment(&config, cli.seed_offset)?;
            report(&output);
        }
        Command::Ablation { config } => {
            let config = Config::load(&config)?;
            let output = run_ablation(&config, cli.seed_offset)?;
            report(&output);
        }
        Command::Summarize { log, out } => {
            let records = read_trial_log(&log)?;
            let rows = summarize(&records)?;
            std::fs::write(&out, to_csv(&rows))
                .with_context(|| format!("failed to write {}", out.display()))?;
            println!("wrote {} summary rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}
