use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use rmc_cli::{execute, Cli};

fn emit(text: &str, to_stderr: bool) {
    let res = if to_stderr {
        std::io::stderr().write_all(text.as_bytes())
    } else {
        std::io::stdout().write_all(text.as_bytes())
    };
    if let Err(e) = res {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = cli.command.common().out.clone();
    match execute(&cli.command) {
        Ok(outcome) => {
            match &out_path {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.primary) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    if let Some(s) = &outcome.secondary {
                        emit(s, false);
                    }
                }
                None => {
                    emit(&outcome.primary, false);
                    if let Some(s) = &outcome.secondary {
                        emit(s, true);
                    }
                }
            }
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
