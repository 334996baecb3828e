//! Command-line front end: argument handling, configuration files, CSV
//! output and exit codes.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 verification
//! violation.

pub mod args;
pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Violation(String),
}

impl CliError {
    fn io(path: &Path, e: io::Error) -> Self {
        CliError::Domain(format!("cannot write {}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Violation(_) => EXIT_VIOLATION,
        }
    }
}

impl From<cvqkd::Error> for CliError {
    fn from(e: cvqkd::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn jobs(cmd: &Command) -> usize {
    match cmd {
        Command::Eval(a) => a.output.jobs,
        Command::Threshold(a) => a.output.jobs,
        Command::Sweep(a) => a.output.jobs,
        Command::Simulate(a) => a.output.jobs,
        Command::Verify(a) => a.output.jobs,
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(&cli.command))
        .build()
        .map_err(|e| CliError::Domain(format!("cannot start worker threads: {e}")))?;
    // Output is buffered so the worker pool never touches the caller's writer.
    let mut buf = Vec::new();
    let result = pool.install(|| match &cli.command {
        Command::Eval(a) => commands::eval(a, &mut buf),
        Command::Threshold(a) => commands::threshold(a, &mut buf),
        Command::Sweep(a) => commands::sweep(a, &mut buf),
        Command::Simulate(a) => commands::simulate(a, &mut buf),
        Command::Verify(a) => commands::verify(a, &mut buf),
    });
    stdout
        .write_all(&buf)
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    result
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run(argv: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let argv = match config::inject(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.0);
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Domain(m) | CliError::Violation(m) => m,
            };
            let _ = writeln!(stderr, "error: {msg}");
            e.exit_code()
        }
    }
}
