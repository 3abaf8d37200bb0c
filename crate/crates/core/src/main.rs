use std::process::ExitCode;

use clap::Parser;
use nax_forecast::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(dir) => {
            eprintln!("outputs written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
