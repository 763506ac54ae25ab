use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = sw_lab::Cli::parse();
    ExitCode::from(sw_lab::run(&cli))
}
