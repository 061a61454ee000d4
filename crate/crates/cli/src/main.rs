use std::process::ExitCode;

use clap::Parser;

use qei_cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching the input-error code.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qei: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
