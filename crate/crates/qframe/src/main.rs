use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use qframe::cli::{Cli, Command};
use qframe::commands::{self, Output};
use qframe::AppError;

fn output_path(command: &Command) -> Option<&std::path::Path> {
    let out = match command {
        Command::Rotate(a) => &a.output,
        Command::Sweep(a) => &a.output,
        Command::Extract(a) => &a.output,
        Command::Bounds(a) => &a.output,
        Command::Basis(a) => &a.output,
        Command::Conserve(a) => &a.output,
    };
    out.out.as_deref()
}

fn emit(command: &Command, output: &Output) -> Result<(), AppError> {
    match output_path(command) {
        Some(path) => fs::write(path, &output.text)?,
        None => io::stdout().lock().write_all(output.text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::run(&cli.command).and_then(|output| {
        for warning in &output.warnings {
            eprintln!("warning: {warning}");
        }
        emit(&cli.command, &output)?;
        match output.failure {
            Some(msg) => Err(AppError::Verification(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
