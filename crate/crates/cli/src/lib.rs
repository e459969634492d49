//! Command implementations behind the `dst-aug` binary.
//!
//! Each `cmd_*` function is usable in-process; the binary only parses flags,
//! sets up the worker pool and maps results to exit codes.

pub mod args;
pub mod commands;

pub use commands::augment::{cmd_augment, AugmentOptions, AugmentReport};
pub use commands::bench::{cmd_bench, BenchCase, BenchOptions, BenchReport};
pub use commands::normalize::{cmd_normalize, NormalizeOptions, NormalizeReport};
pub use commands::preview::{cmd_preview, PreviewOptions};
pub use commands::presets::{preset_document, preset_documents};
pub use commands::{ConfigSource, EntryOutcome};

use std::process::ExitCode;

use clap::Parser;
use dstaug::Result;

use args::{Cli, Command};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| dstaug::Error::InvalidParameter(format!("--threads {n}: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Parses `std::env::args` and runs the selected command.
///
/// Exit codes: 0 success, 1 some manifest entries failed, 2 usage,
/// configuration or I/O error.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match with_threads(cli.threads, || dispatch(cli.command)).and_then(|r| r) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn entry_status(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} entr{} failed", if failures == 1 { "y" } else { "ies" });
        ExitCode::from(1)
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Normalize(a) => {
            let report = cmd_normalize(&a.into_options())?;
            Ok(entry_status(report.failures))
        }
        Command::Augment(a) => {
            let report = cmd_augment(&a.into_options()?)?;
            Ok(entry_status(report.failures))
        }
        Command::Preview(a) => {
            for path in cmd_preview(&a.into_options()?)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(a) => {
            let out = a.out.clone();
            let report = cmd_bench(&a.into_options()?)?;
            let json = report.to_json();
            if let Some(path) = out {
                std::fs::write(&path, &json).map_err(|e| dstaug::Error::io(&path, e))?;
            }
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets(a) => {
            commands::presets::cmd_presets(a.dump, a.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
