//! `tailequiv`: command-line front end for tail-equivalence estimation,
//! tests and the simulation and empirical studies.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical or
//! degeneracy error. Failures print one machine-readable line on stderr:
//! `error: kind=<usage|data|numerical> message="..."`.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use tailequiv::{Error, ErrorKind};

use commands::Cli;

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Usage => "usage",
        ErrorKind::Data => "data",
        ErrorKind::Numerical => "numerical",
    }
}

fn report(kind: ErrorKind, message: &str) -> ExitCode {
    eprintln!("error: kind={} message={:?}", kind_name(kind), message);
    ExitCode::from(exit_code(kind))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion | ClapErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_owned();
            return report(ErrorKind::Usage, &first);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return report(ErrorKind::Usage, "--jobs must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return report(ErrorKind::Usage, &e.to_string());
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e: Error = e;
            report(e.kind(), &e.to_string())
        }
    }
}
