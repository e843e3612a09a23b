//! Library side of the `usec` binary: flag types, subcommand logic, and the
//! Monte-Carlo trials engine. Kept as a library so integration tests can
//! drive the experiment code in-process.

pub mod cli;
pub mod commands;
pub mod trials;

pub use commands::{run, Failure};
