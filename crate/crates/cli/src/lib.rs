//! Command-line front end: model generation, reduction runs, sweeps and
//! analysis reports.

pub mod args;
pub mod commands;
pub mod pipeline;

use pamor::par::Execution;

use args::{Cli, Command};

/// Errors surfaced to the shell. See [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(pamor::Error),
}

impl CliError {
    /// 1 = usage or configuration, 2 = numerical failure, 3 = I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                pamor::Error::InvalidConfig(_) => 1,
                pamor::Error::Io { .. } | pamor::Error::Parse { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Generate { model } => commands::generate(model, &cli.out_dir).map(|_| ()),
        Command::Reduce(a) => commands::reduce(a, &cli.out_dir, exec).map(|_| ()),
        Command::Sweep(a) => commands::sweep(a, &cli.out_dir, exec).map(|_| ()),
        Command::Analyze(a) => commands::analyze(a, &cli.out_dir, exec).map(|_| ()),
    }
}
