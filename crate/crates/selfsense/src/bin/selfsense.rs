use std::process::ExitCode;

use clap::Parser;

use selfsense::cli::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("selfsense: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
