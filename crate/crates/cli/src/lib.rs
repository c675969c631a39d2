//! Run configuration, file formats, convergence studies and check suites for
//! the `nlsfem` command-line tool.

pub mod checks;
pub mod config;
pub mod csv;
pub mod error;
pub mod field_io;
pub mod run;
pub mod study;

pub use error::{CliError, Result};
