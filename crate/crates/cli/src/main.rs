//! `coupled`: tables and verification reports for the coupled exponential family.

// `!(x > 0.0)` style checks are kept so NaN falls through to the error path
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use coupled_entropy::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization failed: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Format(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coupled", version, about = "Coupled entropy tables, checks and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form and quadrature entropies of the coupled exponential over a coupling grid
    EntropyTable(commands::EntropyTableArgs),
    /// Raw and scale-normalized density curves for several scales
    ScaleFamily(commands::ScaleFamilyArgs),
    /// Simulate the multiplicative-noise process and compare with its coupled-Gaussian limit
    SdeRun(commands::SdeRunArgs),
    /// Perturbation test of the maximum-entropy property of the coupled exponential
    MaxentVerify(commands::MaxentArgs),
    /// Evaluate one quantity and print it with 12 significant digits
    Eval(commands::EvalArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EntropyTable(a) => commands::entropy_table(&a),
        Command::ScaleFamily(a) => commands::scale_family(&a),
        Command::SdeRun(a) => commands::sde_run(&a),
        Command::MaxentVerify(a) => commands::maxent_verify(&a),
        Command::Eval(a) => commands::eval(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
