mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::report::{resolve_output, write_atomic, Report, Timing};

/// Numerical front end for singular radial Schroedinger problems: endpoint
/// classification, boundary-parametrized realizations, channel spectra, and
/// the solenoid partial-wave assembly.
#[derive(Debug, Parser)]
#[command(name = "abspec", version, max_term_width = 100)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Report destination; stdout when absent. Relative paths resolve
    /// against ABSPEC_OUTPUT_DIR when that variable is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    /// Flat JSON file with default option values (CLI flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Attach wall-clock timing to the report (reports are byte-identical
    /// across reruns only without it).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the endpoints of a potential and report the extension
    /// structure.
    Classify(commands::ClassifyArgs),
    /// Integrate -u'' + (q - E) u = 0 from one point to another.
    SolveIvp(commands::SolveIvpArgs),
    /// Discrete spectrum of one radial channel realization.
    Eigen(commands::EigenArgs),
    /// Solenoid-Hamiltonian operations on the channel decomposition.
    #[command(subcommand)]
    Ab(AbCommand),
    /// rho/sigma splitting and boundary-angle decomposition of a test
    /// function.
    Decompose(commands::DecomposeArgs),
}

#[derive(Debug, Subcommand)]
enum AbCommand {
    /// Assemble the direct-integral spectrum over a p grid.
    Spectrum(commands::AbSpectrumArgs),
    /// Unitarity and intertwining diagnostics of the cylindrical transform.
    TransformCheck(commands::TransformCheckArgs),
}

/// Command failure with its process exit code (2 validation,
/// 3 inconclusive / solver-failure-dominated).
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError { message, code: 2 }
    }

    pub fn inconclusive(message: String) -> Self {
        CliError { message, code: 3 }
    }
}

pub struct CommandOutput {
    pub report: Report,
    pub csv: report::CsvTable,
    pub exit_code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = std::time::Instant::now();

    let config = match Config::load(cli.global.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };

    let outcome = match &cli.command {
        Command::Classify(args) => commands::run_classify(args, &config),
        Command::SolveIvp(args) => commands::run_solve_ivp(args, &config),
        Command::Eigen(args) => commands::run_eigen(args, &config),
        Command::Ab(AbCommand::Spectrum(args)) => commands::run_ab_spectrum(args, &config),
        Command::Ab(AbCommand::TransformCheck(args)) => {
            commands::run_transform_check(args, &config)
        }
        Command::Decompose(args) => commands::run_decompose(args, &config),
    };

    let mut output = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };

    if cli.global.timing {
        output.report.timing = Some(Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }

    let rendered = match cli.global.format.as_str() {
        "csv" => output.csv.render(),
        _ => output.report.to_json(),
    };

    match &cli.global.output {
        None => {
            print!("{rendered}");
        }
        Some(path) => {
            let path = resolve_output(path);
            if let Err(e) = write_atomic(&path, &rendered) {
                eprintln!("error: cannot write report to {path:?}: {e}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(output.exit_code)
}
