use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmcontract_cli::{exit, parse_config_with, run, ExperimentConfig, RunError, Scenario};
use pmcontract_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "pmcontract", version, about = "Contraction experiments for porous medium and fast diffusion equations")]
struct Cli {
    #[command(subcommand)]
    scenario: Command,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Seed, overriding `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify a grid of (alpha, p) against K_|n|.
    Region,
    /// Q/M matrices, determinants and the positivity scan at one point.
    Matrices,
    /// Evolve one initial datum and record mass and extrema.
    Simulate,
    /// Contraction functional and balance for a pair of solutions.
    Contract,
    /// Gradient functional and balance.
    Gradient,
    /// Difference quotients along a space-time direction.
    Directional,
    /// Energy decay and gradient-flow residual.
    Gradflow,
    /// Contraction verdicts over a grid of (n, alpha, p).
    Sweep,
    /// Quick self-checks of the numerical kernels.
    Validate,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Region => Scenario::Region,
            Command::Matrices => Scenario::Matrices,
            Command::Simulate => Scenario::Simulate,
            Command::Contract => Scenario::Contract,
            Command::Gradient => Scenario::Gradient,
            Command::Directional => Scenario::Directional,
            Command::Gradflow => Scenario::Gradflow,
            Command::Sweep => Scenario::Sweep,
            Command::Validate => Scenario::Validate,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let scenario = Scenario::from(cli.scenario);
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config_with(&text, Some(scenario)).map_err(|e| e.to_string())?;
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(exit::CONFIG as u8);
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    let code = match run(&cfg, cli.workers) {
        Ok(outcome) => {
            let _ = pmcontract_cli::run::write_summary(&outcome, &mut std::io::stdout());
            pmcontract_cli::run::status_code(&outcome)
        }
        Err(RunError::Core(e @ CoreError::Instability { .. })) => {
            eprintln!("error: {e}");
            exit::INSTABILITY
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::OTHER
        }
    };
    ExitCode::from(code as u8)
}
