use std::path::PathBuf;
use std::process::ExitCode;

use altdesign::presets::Preset;
use altdesign::run::{cmd_design, cmd_evaluate, cmd_reproduce};
use altdesign::Scale;
use clap::{Parser, Subcommand};

/// Bayesian design under an alternative model.
#[derive(Parser)]
#[command(name = "altdesign", version)]
struct Cli {
    /// Worker threads; 0 picks automatically. Results do not depend on it.
    #[arg(long, global = true, env = "ALTDESIGN_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a design for each configured objective and cross-evaluate.
    Design {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Root seed; overrides the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo and search budget; overrides the configuration.
        #[arg(long, value_enum)]
        scale: Option<Scale>,
        /// Acknowledge the hours-long run that `--scale paper` implies.
        #[arg(long)]
        confirm_paper_scale: bool,
    },
    /// Evaluate existing designs and report their efficiencies.
    Evaluate {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Design CSV; repeat for several designs.
        #[arg(long = "design", required = true)]
        designs: Vec<PathBuf>,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Root seed; overrides the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a worked example end to end.
    Reproduce {
        #[arg(value_enum)]
        example: Preset,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Root seed; overrides the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo and search budget.
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        /// Acknowledge the hours-long run that `--scale paper` implies.
        #[arg(long)]
        confirm_paper_scale: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design { config, out, seed, scale, confirm_paper_scale } => {
            cmd_design(&config, &out, seed, scale, confirm_paper_scale, cli.threads)
        }
        Command::Evaluate { config, designs, out, seed } => cmd_evaluate(&config, &designs, &out, seed, cli.threads),
        Command::Reproduce { example, out, seed, scale, confirm_paper_scale } => {
            cmd_reproduce(example, &out, seed, scale, confirm_paper_scale, cli.threads)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
