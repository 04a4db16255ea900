//! Command-line front end for the weakmap pipeline.
//!
//! `map` labels requirements with CWE categories, `experiment` compares the
//! classifiers on that labeled set, `predict` applies a saved bundle to new
//! requirements, and `inspect` prints the provenance of any artifact.

pub mod args;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};

pub use args::{Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, EXIT_INTERNAL, EXIT_USER};

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.run_config()?;
    match &cli.command {
        Command::Map(_) => {
            let outcome = commands::cmd_map(&cfg)?;
            eprintln!("{}", commands::map_log_line(&outcome));
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Experiment(_) => {
            let outcome = commands::cmd_experiment(&cfg)?;
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            print!("{}", outcome.report.summary());
        }
        Command::Predict(a) => {
            let outcome = commands::cmd_predict(
                &cfg,
                &a.bundle,
                &a.input,
                a.output.as_deref(),
                a.vocabulary.as_deref(),
            )?;
            eprintln!(
                "predict: {} rows written to {}",
                outcome.rows,
                outcome.output.display()
            );
        }
        Command::Inspect(a) => print!("{}", commands::cmd_inspect(&a.path)?),
    }
    std::io::stdout()
        .flush()
        .map_err(|e| CliError::user("IoError", format!("stdout: {e}")))
}

/// Runs one parsed command line and returns the process exit code. Errors
/// are printed to stderr as a single `error kind=... msg=...` line.
pub fn run(cli: &Cli) -> i32 {
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| dispatch(cli)));
    let err = match outcome {
        Ok(Ok(())) => return 0,
        Ok(Err(e)) => e,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            CliError::internal("InternalError", msg)
        }
    };
    eprintln!("{}", err.line());
    err.code
}

/// Parses `args` and runs them. `--help` and `--version` exit 0; any other
/// parse failure is a user error reported in the usual one-line form.
pub fn run_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    use clap::Parser;
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            0
        }
        Err(e) => {
            let msg = e.render().to_string();
            let msg = msg.trim().trim_start_matches("error: ");
            eprintln!("{}", CliError::user("UsageError", msg).line());
            EXIT_USER
        }
    }
}
