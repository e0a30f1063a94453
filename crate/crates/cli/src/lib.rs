//! Driver for the bose3b pipeline: configuration, dispatch to the core
//! modules and JSON reports with CSV side files.

pub mod commands;
pub mod config;
pub mod report;
pub mod sandwich;

use std::time::Instant;

pub use config::{Cli, Command, Settings};
pub use report::{Outcome, Report, SideFile, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bose3b_core::Error),
}

impl CliError {
    /// 1 for configuration problems, 3 for numerical nonconvergence, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(bose3b_core::Error::InvalidInput(_) | bose3b_core::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

/// Resolves the configuration, runs the command and assembles the report.
/// Side files are written next to `--out` when it is set.
pub fn run(command: Command, flags: &Settings) -> Result<Report, CliError> {
    let settings = flags.resolve()?;
    if let Some(t) = settings.threads {
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let start = Instant::now();
    let outcome = match command {
        Command::Scatter => commands::scatter(&settings)?,
        Command::Dyson => commands::dyson(&settings)?,
        Command::Temple => commands::temple(&settings)?,
        Command::Diag => commands::diag(&settings)?,
        Command::Bounds => commands::bounds(&settings)?,
        Command::Sandwich => commands::sandwich(&settings)?,
    };
    let runtime_s = start.elapsed().as_secs_f64();
    report::finish(command, &settings, outcome, runtime_s)
}
