use std::process::ExitCode;

use clap::Parser;

use collatz_flows_cli::args::Cli;
use collatz_flows_cli::commands::exit_code;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match collatz_flows_cli::run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(witness)) => {
            eprintln!("invariant failure:\n{witness}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
