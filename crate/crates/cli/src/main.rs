use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod document;
mod error;
mod input;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = cli::Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pollsel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
