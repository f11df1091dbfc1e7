use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod render;

use commands::CliError;

/// Resource estimates and desk-scale emulations for EUV absorption and
/// photoemission algorithms.
#[derive(Debug, Parser)]
#[command(name = "euvq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON input file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Absorption cost report for one spec or a sweep.
    EstimateAbsorption,
    /// Photoemission cost report for one spec or a sweep.
    EstimatePhotoemission,
    /// Cross-section spectrum of a small scene.
    EmulateAbsorption,
    /// Grid photoemission pipeline and kinetic-energy histogram.
    EmulatePhotoemission,
    /// Double factorization of a two-electron tensor.
    Cdf,
    /// Exhaustive checks of the comparator and radius arithmetic.
    ArithVerify,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EUVQ_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                ClapErrorKind::InvalidSubcommand
                | ClapErrorKind::MissingSubcommand
                | ClapErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                euvq_core::ErrorKind::Numerical => EXIT_NUMERICAL,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let input = cli.input.as_deref();
    let out = match cli.command {
        Command::EstimateAbsorption => commands::estimate_absorption(commands::require(input)?)?,
        Command::EstimatePhotoemission => commands::estimate_photoemission(commands::require(input)?)?,
        Command::EmulateAbsorption => commands::emulate_absorption(commands::require(input)?, cli.seed)?,
        Command::EmulatePhotoemission => commands::emulate_photoemission(commands::require(input)?, cli.seed)?,
        Command::Cdf => commands::cdf(commands::require(input)?, cli.seed)?,
        Command::ArithVerify => commands::arith_verify(input, cli.seed)?,
    };
    let text = out.render(cli.format)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(path.clone(), e))?,
        None => print!("{text}"),
    }
    match out.failure {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}
