//! `biolit` command-line entry point.
//!
//! Each subcommand is a thin adapter over one library operation. Success
//! prints a JSON summary on stdout and exits 0. Usage errors exit 2; any other
//! failure exits 1 with `{"error":{"kind":..,"message":..}}` on stderr.

mod args;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;
use thiserror::Error;

pub use args::Cli;
pub use config::PipelineConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{message}")]
    Op { kind: &'static str, message: String },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::Op { kind, .. } => kind,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    pub(crate) fn op(kind: &'static str) -> impl Fn(&dyn std::fmt::Display) -> CliError {
        move |e| CliError::Op { kind, message: e.to_string() }
    }

    pub(crate) fn io(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
        move |e| CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

fn init_logging(verbose: bool, json_logs: bool) {
    let level = if verbose { tracing::Level::DEBUG } else { tracing::Level::WARN };
    let builder = tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).with_target(false);
    let _ = if json_logs { builder.json().try_init() } else { builder.try_init() };
}

fn report_error(err: &CliError) {
    let body = json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
    let _ = writeln!(std::io::stderr(), "{body}");
}

/// Parse `argv` (including the program name), run the subcommand and return
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    init_logging(cli.verbose, cli.json_logs);
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            report_error(&err);
            if let CliError::Usage(_) = err {
                let _ = writeln!(std::io::stderr(), "run `biolit --help` for usage");
            }
            err.exit_code()
        }
    }
}
