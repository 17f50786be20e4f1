//! Reproducible Monte-Carlo campaigns over the `rfcurve` models.
//!
//! A run reads a [`RunConfig`], expands the named experiment into
//! independent units, computes them on a worker pool and appends one
//! [`Record`] per unit to `records.jsonl` in the output directory. The final
//! [`Summary`] lands next to it as `summary.json` and `summary.csv`.
//! Interrupted runs resume from the records already written.

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod runner;
pub mod summary;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use record::{sample_seed, Record};
pub use runner::{run, summarize_dir, verify, RunOptions, RunOutcome, VerifyReport};
pub use summary::Summary;
