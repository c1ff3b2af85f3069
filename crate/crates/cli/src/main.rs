use std::process::ExitCode;

use clap::Parser;
use entropic_ot_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eot: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
