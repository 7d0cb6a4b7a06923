//! `hexgap`: spectral gaps, coverage audits and finite-size certificates.

mod args;
mod cache;
mod commands;
mod config;
mod fail;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = fail::CliError::Usage(e.kind().to_string());
            err.report();
            return ExitCode::from(err.exit_code());
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
