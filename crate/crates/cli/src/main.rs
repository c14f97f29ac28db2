use std::process::ExitCode;

use clap::Parser;
use netsel_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match cli.execute() {
        Ok(()) => ExitCode::from(netsel_cli::error::EXIT_OK),
        Err(err) => {
            eprintln!("netsel: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
