use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use phonon_bs::{CliError, Pipeline, RunConfig, Stage};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Positions,
    Couplings,
    Decompose,
    Compile,
    Simulate,
    Distribution,
    Sample,
    Detect,
    Verify,
    All,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Positions => Stage::Positions,
            Command::Couplings => Stage::Couplings,
            Command::Decompose => Stage::Decompose,
            Command::Compile => Stage::Compile,
            Command::Simulate => Stage::Simulate,
            Command::Distribution => Stage::Distribution,
            Command::Sample => Stage::Sample,
            Command::Detect => Stage::Detect,
            Command::Verify => Stage::Verify,
            Command::All => return None,
        })
    }
}

/// Trapped-ion boson sampling pipeline.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Stage to run.
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for stage artifacts.
    #[arg(long, default_value = "./out")]
    output: PathBuf,
    /// Replaces every stage seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
}

fn run(args: &Args) -> Result<Vec<String>, CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let mut pipeline = Pipeline::new(config, &args.output)?;
    match args.command.stage() {
        Some(stage) => pipeline.run(stage).map(|line| vec![line]),
        None => pipeline.run_all(),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&args) {
        Ok(lines) => {
            if !args.quiet {
                for l in lines {
                    println!("{l}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
