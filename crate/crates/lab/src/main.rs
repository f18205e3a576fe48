use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlhom_lab::commands::{self, CommandError, Run};
use nlhom_lab::config;

/// Nonlocal energies on periodic perforated domains.
#[derive(Debug, Parser)]
#[command(name = "nlhom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (overrides the configuration).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random test functions (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Connectivity thresholds, |K| and components at (δ, ε).
    Geometry,
    /// Energy of a sampled function.
    Energy,
    /// Homogenized tensors over a list of κ.
    Cell,
    /// Regime sweep over (ε, δ) pairs.
    Sweep,
    /// Degenerate recovery or zero-energy sequence.
    Recover,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CommandError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config::ConfigError::Parse("--config <path> is required".into()))?;
    let loaded = config::parse_config(path)?;
    let run = Run::new(loaded, &cli.out, cli.seed, cli.threads);
    if run.threads == 0 {
        return Err(config::ConfigError::Parse("--threads must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads)
        .build_global()
        .map_err(|e| CommandError::Failed(e.to_string()))?;
    match cli.command {
        Command::Geometry => commands::geometry(&run),
        Command::Energy => commands::energy(&run),
        Command::Cell => commands::cell(&run),
        Command::Sweep => commands::sweep(&run),
        Command::Recover => commands::recover(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
