use std::process::ExitCode;

use cake_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cake_cli::exit::INPUT } else { cake_cli::exit::OK });
        }
    };
    let format = cli.format;
    match cake_cli::dispatch(cli) {
        Ok(report) => {
            print!("{}", report.render(format));
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
