//! Command-line front end for the `ordstat` library.
//!
//! Each subcommand is a function returning a [`RunReport`]; the binary only
//! parses arguments, prints the report and maps the outcome to an exit code:
//! 0 on success, 2 for invalid input, 3 when an enumeration exceeds the cap,
//! 4 when an internal consistency check fails.

pub mod args;
pub mod commands;
pub mod report;

pub use args::{Cli, Command};
pub use commands::{
    cmd_demo, cmd_induce, cmd_midp, cmd_randomize, cmd_table, cmd_twosample, CliError, Demo, DemoOptions, Mode,
    SampleInput, Settings, TableOptions, TieBreak,
};
pub use report::RunReport;
