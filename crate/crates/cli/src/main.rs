use std::process::ExitCode;

use clap::Parser;

use cellist_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
        // the panic message has already been printed by the default hook
        Err(_) => ExitCode::from(2),
    }
}
