//! Library side of the `shssa` command-line tool.
//!
//! Everything the binary does is reachable from here so integration
//! tests can drive jobs in-process and check artifacts without spawning
//! the executable.

pub mod config;
pub mod error;
pub mod grid_io;
pub mod manifest;
pub mod plots;
pub mod runner;
