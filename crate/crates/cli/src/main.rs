//! `lpf`: lattice generation, single filter runs and benchmarks.

mod commands;
mod error;
mod models;
mod settings;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BenchArgs, Common, FilterArgs, LatticeArgs};
use error::{error_line, CliError};

#[derive(Debug, Parser)]
#[command(name = "lpf", version, about = "Lattice particle filter toolkit")]
struct Cli {
    /// Flat `key = value` (or JSON object) configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lattice point sets.
    Lattice {
        #[command(subcommand)]
        action: LatticeCommand,
    },
    /// Simulate one sequence and filter it, writing a per-step CSV trace.
    RunFilter {
        #[arg(long)]
        model: Option<String>,
        /// pf | lpf
        #[arg(long)]
        scheme: Option<String>,
        /// multinomial | residual
        #[arg(long)]
        resample: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Lattice generator; allows particle counts outside the table.
        #[arg(long)]
        generator: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-trial PF vs LPF comparison for one model.
    Bench {
        /// disk | toy | lingauss | body
        model: String,
        /// Comma-separated particle counts.
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        resample: Option<String>,
        #[arg(long)]
        generator: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum LatticeCommand {
    /// Write the points of a (shifted) Korobov rule as CSV.
    Gen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        generator: Option<u64>,
        #[arg(long)]
        shift_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => settings::load_config(path)?,
        None => BTreeMap::new(),
    };
    let common = Common {
        config,
        quiet: cli.quiet,
    };
    let run = move || match cli.command {
        Command::Lattice {
            action:
                LatticeCommand::Gen {
                    n,
                    dim,
                    generator,
                    shift_seed,
                    out,
                },
        } => commands::lattice_gen(
            &common,
            LatticeArgs {
                n,
                dim,
                generator,
                shift_seed,
                out,
            },
        ),
        Command::RunFilter {
            model,
            scheme,
            resample,
            n,
            steps,
            seed,
            generator,
            out,
        } => commands::run_filter_cmd(
            &common,
            FilterArgs {
                model,
                scheme,
                resample,
                n,
                steps,
                seed,
                generator,
                out,
            },
        ),
        Command::Bench {
            model,
            n,
            trials,
            steps,
            seed,
            resample,
            generator,
            out,
        } => commands::bench(
            &common,
            BenchArgs {
                model,
                n,
                trials,
                steps,
                seed,
                resample,
                generator,
                out,
            },
        ),
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim_start_matches("error:").trim())
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", error_line("usage", &message.join(" ")));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
