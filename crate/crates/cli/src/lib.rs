//! Library behind the `qbd` binary.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit code: 0 on success, 1 for invalid input or a failed `verify`, 2 for
//! numerical failure and 3 for I/O or parse errors.

pub mod args;
pub mod commands;
pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use qbd_core::QbdError;
use thiserror::Error;

use crate::args::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] QbdError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(QbdError::Io(_) | QbdError::Parse(_)) | CliError::Output(_) => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::VerifyFailed(_) => 1,
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run`], writing to the given streams instead of the process ones.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
