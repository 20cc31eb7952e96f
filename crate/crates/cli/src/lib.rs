//! Library side of the `numjcf` command: matrix files, reports and the
//! subcommands, kept apart from argument parsing so tests can drive them.

pub mod commands;
pub mod matfile;
pub mod report;
