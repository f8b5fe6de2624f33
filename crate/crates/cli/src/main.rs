use std::process::ExitCode;

use clap::Parser;
use swave_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match swave_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
