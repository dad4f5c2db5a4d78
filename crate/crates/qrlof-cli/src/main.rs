//! Command-line front end: `test` runs one bootstrap-calibrated lack-of-fit
//! test on a CSV dataset, `simulate` produces rejection-proportion tables and
//! power curves, and `oracle` cross-checks the closed-form statistic against
//! Monte Carlo sphere integration.
//!
//! The binary is a thin shell: given the same seed, its reports are
//! byte-identical to the corresponding library calls.

mod cli;

use std::process::ExitCode;

fn main() -> ExitCode {
    let command = cli::parse();
    match cli::run(command) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
