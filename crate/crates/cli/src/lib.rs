//! `ensctl`: design, simulation and analysis from the command line.
//!
//! Exit codes: 0 success, 2 invalid input (bad flags, malformed or
//! schema-violating files), 3 infeasibility verdict, 1 internal numerical
//! failure. A verdict is a correct answer, so its report is still printed
//! and written before exiting.

pub mod args;
mod commands;
pub mod config;
mod output;

use clap::Parser;
use ensctl_core::Error;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// How a command that ran to completion ended.
#[derive(Debug, PartialEq)]
pub(crate) enum Status {
    Done,
    /// The requested design or property is not achievable.
    Infeasible(String),
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::Uncontrollable { .. } => EXIT_INFEASIBLE,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::GridMismatch(_) => EXIT_INVALID,
        Error::DegenerateExtraction { .. } | Error::Numerical(_) => EXIT_FAILURE,
    }
}

/// Run with `argv[0]` the program name; returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let name = cli.command.name();
    match dispatch(cli.command) {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::Infeasible(msg)) => {
            eprintln!("{name}: infeasible: {msg}");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> ensctl_core::Result<Status> {
    match cmd {
        Command::DesignSlr(a) => commands::design::slr(&a),
        Command::DesignPattern(a) => commands::design::pattern(&a),
        Command::DesignComposite(a) => commands::design::composite(&a),
        Command::DesignZz(a) => commands::design::zz(&a),
        Command::Simulate(a) => commands::simulate::simulate(&a),
        Command::FidelityMap(a) => commands::simulate::fidelity(&a),
        Command::AnalyzeLie(a) => commands::analyze::lie(&a),
        Command::AnalyzeLinear(a) => commands::analyze::linear(&a),
        Command::DemoPhase(a) => commands::demo::phase(&a),
        Command::DemoHeisenberg(a) => commands::demo::heisenberg(&a),
    }
}
