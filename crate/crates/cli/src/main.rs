//! Command-line driver: simulate a day, train the agent, or evaluate a
//! checkpoint against the rule baseline. All pipelines live in the
//! `flexcluster` library; this binary only parses arguments, loads the
//! configuration document, and reports results.
//!
//! Verbosity is controlled by the `FLEXCLUSTER_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`; default `info`).

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use flexcluster::config::{ControllerKind, ExperimentConfig};
use flexcluster::experiment::{
    checkpoint_scalar_width, evaluate, simulate, train, EvaluateArtifacts, RolloutSummary,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "flexcluster",
    version,
    about = "Co-simulated building-cluster control: rule baseline and soft actor-critic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test day under a controller; writes per-unit CSVs, the
    /// reward trace, and diagnostic plots into the output directory.
    Simulate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the controller named in the configuration.
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Train the learning controller for the configured episode budget;
    /// writes the training log, checkpoints, and the learning curve.
    Train {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Continue from a saved checkpoint manifest.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Roll out a trained checkpoint and the rule baseline on the test
    /// day; writes both CSV sets and a demand comparison plot.
    Evaluate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint manifest produced by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ControllerArg {
    Rbc,
    Sac,
}

impl From<ControllerArg> for ControllerKind {
    fn from(value: ControllerArg) -> Self {
        match value {
            ControllerArg::Rbc => ControllerKind::Rbc,
            ControllerArg::Sac => ControllerKind::Sac,
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path)
        .with_context(|| format!("loading configuration {}", path.display()))
}

fn print_summary(name: &str, summary: &RolloutSummary) {
    println!(
        "{name}: return {:.4}, peak demand {:.0} W, comfort penalty {:.4}, \
         {}/{} steps within threshold",
        summary.episode_return,
        summary.peak_power,
        summary.comfort_penalty,
        summary.steps_within_threshold,
        summary.steps,
    );
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, controller } => {
            let mut config = load_config(&config)?;
            if let Some(c) = controller {
                config.controller = c.into();
            }
            log::info!(
                "simulating test day {} under the {:?} controller",
                config.test_day,
                config.controller
            );
            let artifacts = simulate(&config)?;
            for path in artifacts.csv_paths.iter().chain(&artifacts.plot_paths) {
                println!("wrote {}", path.display());
            }
            print_summary("rollout", &artifacts.summary);
        }
        Command::Train { config, resume } => {
            let config = load_config(&config)?;
            log::info!(
                "training for {} episodes over {} training days",
                config.episodes,
                config.training_days.len()
            );
            // Training runs at 32-bit network precision.
            let artifacts = train::<f32>(&config, resume.as_deref())?;
            println!("wrote {}", artifacts.log_path.display());
            println!("wrote {}", artifacts.final_checkpoint.display());
            println!("wrote {}", artifacts.best_checkpoint.display());
            println!("wrote {}", artifacts.curve_path.display());
            println!(
                "completed {} episodes; best return {:.4}",
                artifacts.episodes_done, artifacts.best_return
            );
        }
        Command::Evaluate { config, checkpoint } => {
            let config = load_config(&config)?;
            let width = checkpoint_scalar_width(&checkpoint)?;
            log::info!(
                "evaluating checkpoint {} ({}-bit scalars)",
                checkpoint.display(),
                8 * width
            );
            let artifacts: EvaluateArtifacts = match width {
                4 => evaluate::<f32>(&config, &checkpoint)?,
                8 => evaluate::<f64>(&config, &checkpoint)?,
                other => {
                    return Err(anyhow!(
                        "checkpoint stores {other}-byte scalars; expected 4 or 8"
                    ))
                }
            };
            for path in artifacts
                .policy
                .csv_paths
                .iter()
                .chain(&artifacts.baseline_csv_paths)
                .chain(&artifacts.policy.plot_paths)
            {
                println!("wrote {}", path.display());
            }
            println!("wrote {}", artifacts.comparison_path.display());
            print_summary("policy", &artifacts.policy_summary);
            print_summary("baseline", &artifacts.baseline_summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLEXCLUSTER_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
