//! Command-line driver: sweeps, fits and oracle runs written as CSV + JSON.

mod commands;
mod config;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CmdResult, Outcome, FIT_COLUMNS, MESH_COLUMNS};
use config::{ConfigError, ExperimentArgs};
use record::{print_schema, SWEEP_COLUMNS};

/// Capacitance, resonances and gap fields of two close-to-touching resonators.
///
/// Tables go to `--out PATH` (CSV, 17 significant digits) with a JSON mirror
/// at the same path with a `.json` extension, or to stdout without `--out`.
/// Exit codes: 0 success, 1 configuration error, 2 every row failed.
#[derive(Parser)]
#[command(name = "closecap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh the pair at the first gap and summarize it (`--out` also writes an OFF file).
    Mesh(ExperimentArgs),
    /// Capacitance matrix per gap.
    Capacitance(ExperimentArgs),
    /// Numeric and asymptotic resonances per gap (needs materials).
    Resonance(ExperimentArgs),
    /// Refit the constants M1, M2 from a sweep file (CSV or JSON).
    Fit {
        /// Sweep file written by `capacitance`, `resonance` or `oracle`.
        input: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Print the output columns and exit.
        #[arg(long)]
        schema: bool,
    },
    /// Mode gradients in the gap and their blow-up rates.
    Blowup(ExperimentArgs),
    /// Image-charge capacitance of two spheres, no meshing.
    Oracle(ExperimentArgs),
}

fn run(command: Command) -> CmdResult {
    if let Command::Fit { input, out, schema } = command {
        if schema {
            print_schema(FIT_COLUMNS);
            return Ok(Outcome::Done);
        }
        let input = input.ok_or_else(|| ConfigError("fit needs an input sweep file".into()))?;
        return commands::fit(&input, out.as_deref());
    }
    type Runner = fn(&config::Experiment) -> CmdResult;
    let (args, run, columns): (ExperimentArgs, Runner, _) = match command {
        Command::Mesh(a) => (a, commands::mesh, MESH_COLUMNS),
        Command::Capacitance(a) => (a, commands::capacitance, SWEEP_COLUMNS),
        Command::Resonance(a) => (a, commands::resonance, SWEEP_COLUMNS),
        Command::Blowup(a) => (a, commands::blowup, SWEEP_COLUMNS),
        Command::Oracle(a) => (a, commands::oracle, SWEEP_COLUMNS),
        Command::Fit { .. } => unreachable!("handled above"),
    };
    let args = args.with_config_file()?;
    if args.schema {
        print_schema(columns);
        return Ok(Outcome::Done);
    }
    run(&args.resolve()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::AllRowsFailed) => {
            eprintln!("error: every sweep point failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
