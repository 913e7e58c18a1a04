//! `finnet`: build portfolio networks from holdings tables, compare them with
//! null models, run knockout experiments and simulate default cascades.

mod args;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit code 1 for bad input data, 2 for bad arguments.
#[derive(Debug)]
pub enum Failure {
    Data(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Data(m) | Failure::Usage(m) => f.write_str(m),
        }
    }
}

impl From<finnet_core::Error> for Failure {
    fn from(e: finnet_core::Error) -> Self {
        use finnet_core::Error::*;
        match e {
            InvalidParameter(_) | UnknownCountry(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_pool(cli.jobs).and_then(|_| commands::run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("finnet: error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_pool(jobs: Option<usize>) -> Result<(), Failure> {
    match jobs {
        None => Ok(()),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}"))),
    }
}
