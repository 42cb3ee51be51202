//! Pipeline stages behind the `sarplan` binary: constraints, plan, ik,
//! simulate, image and verify. Every stage reads and writes plain files so it
//! can be rerun on its own.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Expectations, RunConfig};
pub use error::{CliError, CliResult};

/// Sizes the global rayon pool from `SARPLAN_THREADS`, if set.
pub fn init_threads(value: Option<&str>) -> CliResult<()> {
    let Some(text) = value else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SARPLAN_THREADS: expected a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("SARPLAN_THREADS: {e}")))
}
