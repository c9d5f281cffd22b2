use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = icselect_cli::cli::Cli::parse();
    match icselect_cli::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
