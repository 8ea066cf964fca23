//! Configuration files, run orchestration, sweeps and output files for the
//! `piezowave` command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{RunConfig, SweepConfig};
pub use error::{HarnessError, Result};
