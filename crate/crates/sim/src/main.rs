use std::process::ExitCode;

use clap::Parser;
use effadam_sim::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("effadam: {e}");
            ExitCode::FAILURE
        }
    }
}
