use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pumped_cli::{commands, load_config, output_dir, CliError};

#[derive(Parser)]
#[command(name = "pumped", version, about = "Pumped open quantum systems: steady states, spectra and relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the initial state and write trajectory, Lyapunov and method-comparison CSVs
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print eigenvalues, steady state and decomposition residuals
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Steady population difference over a grid of one two-level parameter
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the injected-ensemble density matrix against the master equation
    EnsembleVerify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        quad_step: f64,
    },
    /// Recompute the bundled reference cases
    Fixtures {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            commands::run(&cfg, &output_dir(out.as_deref(), &cfg))
        }
        Command::Spectrum { config } => commands::spectrum(&load_config(&config)?),
        Command::Sweep {
            config,
            param,
            from,
            to,
            steps,
            out,
        } => {
            let cfg = load_config(&config)?;
            commands::sweep(&cfg, &param, from, to, steps, &output_dir(out.as_deref(), &cfg))
        }
        Command::EnsembleVerify { config, quad_step } => {
            commands::ensemble_verify(&load_config(&config)?, quad_step)
        }
        Command::Fixtures { out } => commands::fixtures(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Threshold { report, .. } = &e {
                print!("{report}");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
