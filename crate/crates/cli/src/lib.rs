//! Command-line front end: `simulate`, `filter`, `scan` and `compare`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use error::CliResult;

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::run_simulate(a),
        Command::Filter(a) => commands::run_filter(a),
        Command::Scan(a) => commands::run_scan(a),
        Command::Compare(a) => commands::run_compare(a),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("cs-stap: {e}");
            e.exit_code()
        }
    }
}
