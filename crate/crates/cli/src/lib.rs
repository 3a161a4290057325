//! The `pca` command-line runner.
//!
//! Exit status: 0 success, 1 invalid configuration, 2 runtime failure,
//! 3 acceptance-gate failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use config::{resolve, Cli, Command, RunConfig};
use error::CliError;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pca: {e}");
            e.exit_code()
        }
    }
}

fn with_pool(cfg: &RunConfig, f: impl FnOnce() -> Result<(), CliError> + Send) -> Result<(), CliError> {
    match cfg.workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(f),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    macro_rules! go {
        ($args:expr, $f:path) => {{
            let (cfg, params) = resolve(&cli.common, name, $args)?;
            with_pool(&cfg, || $f(&cfg, &params))
        }};
    }
    match &cli.command {
        Command::Simulate(a) => go!(a, commands::simulate_cmd),
        Command::Localfield(a) => go!(a, commands::localfield_cmd),
        Command::Gaussian(a) => go!(a, commands::gaussian_cmd),
        Command::Verify(a) => go!(a, commands::verify_cmd),
        Command::Converge(a) => go!(a, commands::converge_cmd),
        Command::Selftest(a) => go!(a, commands::selftest_cmd),
    }
}
