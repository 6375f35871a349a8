//! Library side of the `mip` command-line tool.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
