//! Command-line front end for training, evaluation, sweeps and cost reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

use std::ffi::OsString;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, Result, EXIT_CONFIG};

fn dispatch(cli: &Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Cost(a) => commands::cost(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::CompareInit(a) => commands::compare_init(a),
        Command::SweepRatio(a) => commands::sweep_ratio(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
