//! Command-line front end for `collatz-flows`.

pub mod args;
pub mod commands;
pub mod emit;
pub mod init;

use anyhow::Result;

use args::{Cli, Command};
use emit::{emit, resolve_output, Report};

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Orbit { .. } => "orbit",
            Command::Parity { .. } => "parity",
            Command::Coeffs { .. } => "coeffs",
            Command::Energy { .. } => "energy",
            Command::Deriv { .. } => "deriv",
            Command::Flow(_) => "flow",
            Command::Verify { .. } => "verify",
        }
    }
}

pub fn report(command: &Command) -> Result<Report> {
    match command {
        Command::Orbit { params, n, max_steps, max_value } => commands::orbit_cmd(*params, n, *max_steps, max_value),
        Command::Parity { params, k, n, check_bijection } => {
            commands::parity_cmd(*params, *k, n.as_deref(), *check_bijection)
        }
        Command::Coeffs { params, k, verify, max_k } => commands::coeffs_cmd(*params, *k, *verify, *max_k),
        Command::Energy { params, n, k, m, sweep } => commands::energy_cmd(*params, *n, *k, *m, sweep.as_deref()),
        Command::Deriv { params, m, verify } => commands::deriv_cmd(*params, *m, *verify),
        Command::Flow(args) => commands::flow_cmd(args),
        Command::Verify { grid, timing, threads } => commands::verify_cmd(*grid, *timing, *threads),
    }
}

/// Runs one command and writes its report. Returns the invariant-failure
/// witness, if any; the report is written either way.
pub fn run(cli: &Cli) -> Result<Option<String>> {
    let report = report(&cli.command)?;
    let path = resolve_output(cli.output.output.as_deref(), cli.command.name(), cli.output.format);
    emit(&report, cli.output.format, path.as_deref())?;
    Ok(report.failure)
}
