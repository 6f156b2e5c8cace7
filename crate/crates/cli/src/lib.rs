//! Command-line front end for `cake-core`: profile and scenario file I/O,
//! subcommand dispatch, and JSON or text reports.
//!
//! Exit codes: 0 success, 1 input error, 2 a chain produced a violation
//! witness, 3 a certificate or witness failed re-verification.

pub mod args;
pub mod error;
pub mod report;
pub mod request;
pub mod run;
pub mod scenario;

pub use error::{exit, CliError};
pub use report::{Format, Output, RunReport};
pub use request::{Engine, Request};
pub use run::{execute, run_scenario};
pub use scenario::{ProfileSource, ScenarioFile};

use args::{Cli, Invocation};

/// Runs a parsed command line and returns the report to print.
pub fn dispatch(cli: Cli) -> Result<RunReport, CliError> {
    match cli.command.invocation()? {
        Invocation::Scenario(path) => run_scenario(&path, cli.seed),
        Invocation::Request(request) => {
            let profile = cli.profile.as_deref().map(scenario::load_profile).transpose()?;
            execute(&request, profile.as_ref(), cli.seed)
        }
    }
}
