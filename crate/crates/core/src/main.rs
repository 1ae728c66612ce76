use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fraclimit::acceptance::run_acceptance;
use fraclimit::config::{ExperimentConfig, ExperimentId};
use fraclimit::harness::run_experiment;
use fraclimit::report::emit_report;

#[derive(Parser)]
#[command(name = "fraclimit", version, about = "Fractional diffusion limits of kinetic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the available experiment ids.
    ListExperiments,
    /// Run the acceptance suite.
    Check {
        /// Where to write the report.
        #[arg(long, default_value = "fraclimit-check")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::ListExperiments => {
            for id in ExperimentId::ALL {
                println!("{:<24}{}", id.as_str(), id.description());
            }
            Ok(true)
        }
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let dir = output.unwrap_or_else(|| cfg.experiment.output.clone());
            let result = run_experiment(&cfg).with_context(|| format!("running {}", cfg.id()))?;
            for t in &result.tables {
                let slope = t
                    .slope()
                    .map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
                println!("{}: slope {slope}", t.label);
                for (e, err) in t.epsilons.iter().zip(&t.errors) {
                    println!("  eps = {e:<8} error = {err:.6e}");
                }
            }
            for c in &result.checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            let summary = emit_report(std::slice::from_ref(&result), &dir)
                .with_context(|| format!("writing report to {}", dir.display()))?;
            println!("report written to {}", dir.display());
            Ok(summary.passed)
        }
        Command::Check { output } => {
            let (results, outcomes) = run_acceptance().context("running the acceptance suite")?;
            for o in &outcomes {
                println!("{o}");
            }
            emit_report(&results, &output)
                .with_context(|| format!("writing report to {}", output.display()))?;
            Ok(outcomes.iter().all(|o| o.passed))
        }
    }
}
