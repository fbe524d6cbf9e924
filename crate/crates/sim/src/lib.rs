//! Scenario files, instance files, sweeps, CSV reports and plots around
//! `arena-core`. The `arena` binary is a thin clap layer over this crate.

use std::path::{Path, PathBuf};

use arena_core::SimError;

pub mod formats;
pub mod plot;
pub mod record;
pub mod scenario;
pub mod selftest;
pub mod sweep;
pub mod workload;

pub use record::{run_scenario, Record, RunReport, CSV_HEADER};
pub use scenario::{Backend, Kernel, Model, ScenarioConfig};
pub use sweep::sweep;
pub use workload::{KernelResult, Oracle, Workload};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("instance error at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
    #[error("result differs from the serial oracle: {0}")]
    OracleMismatch(String),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, e: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().to_path_buf(), source: e }
    }

    /// 2 for bad input, 1 for everything that went wrong afterwards.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Format { .. } => 2,
            _ => 1,
        }
    }
}
