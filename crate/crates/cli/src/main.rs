use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use expray_cli::{run, Cli, CliError, ErrorKind, CONFIG_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match std::env::var_os(CONFIG_ENV) {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(text) => Some(text),
            Err(e) => return fail(&CliError::from(e)),
        },
        None => None,
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, file.as_deref(), &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let _ = writeln!(io::stdout(), "{}", e.to_json());
    eprintln!("expray: {e}");
    let code = e.kind.exit_code();
    debug_assert!(code != ErrorKind::Parse.exit_code() || e.reason.ends_with("Error"));
    ExitCode::from(code as u8)
}
