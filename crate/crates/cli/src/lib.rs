//! Configuration parsing and pipelines of the `formheat` command.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_str, ConfigError, Pipeline, RawConfig, RunConfig};
pub use run::{run, validate, CliError, Diagnostic, RunSummary};

/// Sizes the global thread pool from `FORMHEAT_THREADS`, if set.
pub fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("FORMHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FORMHEAT_THREADS: expected a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("FORMHEAT_THREADS: {e}"))
}
