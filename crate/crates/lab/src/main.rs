use std::path::PathBuf;
use std::process::ExitCode;

use benign_lab::{execute, Experiment, ExperimentConfig, LabError};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Sweep,
    Rmt,
    Coupon,
    Generalization,
    Calibrate,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Sweep => Experiment::Sweep,
            Command::Rmt => Experiment::Rmt,
            Command::Coupon => Experiment::Coupon,
            Command::Generalization => Experiment::Generalization,
            Command::Calibrate => Experiment::Calibrate,
        }
    }
}

/// Seeded Monte Carlo experiments for ridge-function regression.
#[derive(Debug, Parser)]
#[command(name = "lab", version)]
struct Cli {
    /// Experiment to run; must match the config's `experiment` field.
    #[arg(value_enum)]
    experiment: Command,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<PathBuf, LabError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    let wanted = Experiment::from(cli.experiment);
    if cfg.experiment != wanted {
        return Err(LabError::Config(format!(
            "command `{}` does not match config experiment `{}`",
            wanted.as_str(),
            cfg.experiment.as_str()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    execute(&cfg, cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
