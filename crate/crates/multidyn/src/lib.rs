//! File formats and the `multidyn` command line on top of `multidyn-core`.

pub mod cli;
pub mod csvlog;
pub mod dataset;
pub mod error;
pub mod manifest;
pub mod model;
pub mod pool;
pub mod report;

pub use error::{CliError, Result};
