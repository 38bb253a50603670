use std::io::Write;
use std::process::ExitCode;

use powres::cli;
use powres::Caps;

fn main() -> ExitCode {
    let caps = match Caps::from_env() {
        Ok(caps) => caps,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(cli::EXIT_USAGE as u8);
        }
    };
    let outcome = cli::run(std::env::args_os(), caps);
    let _ = std::io::stdout().write_all(outcome.payload.as_bytes());
    let _ = std::io::stderr().write_all(outcome.diagnostics.as_bytes());
    ExitCode::from(outcome.exit_code as u8)
}
